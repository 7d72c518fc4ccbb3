#![allow(dead_code)]

use std::collections::HashMap;
use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::Path;
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use multileave::InputRankingSet;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Deserialize;

pub const BIN: &str = env!("CARGO_BIN_EXE_multileave");

/// I_1=[1..99,100,101,102], I_2=[1..99,101,102,100], I_3=[1..99,102,100,101]
pub fn worked_inputs() -> InputRankingSet {
    InputRankingSet::from_ids(worked_ids()).unwrap()
}

pub fn worked_ids() -> Vec<Vec<u64>> {
    let with = |tail: [u64; 3]| (1..=99).chain(tail).collect::<Vec<u64>>();
    vec![with([100, 101, 102]), with([101, 102, 100]), with([102, 100, 101])]
}

pub fn worked_strings() -> Vec<Vec<String>> {
    worked_ids().iter().map(|r| r.iter().map(u64::to_string).collect()).collect()
}

/// `n` independent shuffles of `l` item names.
pub fn shuffled_rankings(rng: &mut impl Rng, n: usize, l: usize) -> Vec<Vec<String>> {
    let base: Vec<String> = (0..l).map(|i| format!("item-{i}")).collect();
    (0..n)
        .map(|_| {
            let mut r = base.clone();
            r.shuffle(rng);
            r
        })
        .collect()
}

/// Numbers item names in first-seen order.
pub fn intern(rankings: &[Vec<String>]) -> (Vec<Vec<u64>>, HashMap<&str, u64>) {
    let mut index = HashMap::new();
    let ids = rankings
        .iter()
        .map(|r| {
            r.iter()
                .map(|s| {
                    let next = index.len() as u64;
                    *index.entry(s.as_str()).or_insert(next)
                })
                .collect()
        })
        .collect();
    (ids, index)
}

/// Runs the binary and panics unless it exits 0.
pub fn cli(args: &[&str]) -> String {
    let out = Command::new(BIN).args(args).output().expect("binary runs");
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn free_port() -> SocketAddr {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap()
}

/// Minimal HTTP/1.1 client: one request per connection.
pub fn http(addr: SocketAddr, method: &str, path: &str, body: Option<&str>) -> std::io::Result<(u16, String)> {
    let mut stream = TcpStream::connect(addr)?;
    stream.set_read_timeout(Some(Duration::from_secs(30)))?;
    let body = body.unwrap_or("");
    write!(
        stream,
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )?;
    let mut raw = String::new();
    stream.read_to_string(&mut raw)?;
    let status = raw.split_whitespace().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let text = raw.split_once("\r\n\r\n").map_or("", |(_, b)| b).to_string();
    Ok((status, text))
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Created {
    pub session_id: String,
    pub ranking: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct RankedItem {
    item: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Results {
    pub rankers: Vec<String>,
    pub totals: Vec<f64>,
    pub sessions: usize,
    pub clicks: usize,
    pub pairwise: Vec<Vec<f64>>,
}

/// A `multileave serve` child process.
pub struct Server {
    pub addr: SocketAddr,
    child: Child,
}

impl Server {
    pub fn start(log: &Path) -> Server {
        Self::start_with(log, &[])
    }

    pub fn start_with(log: &Path, extra: &[&str]) -> Server {
        let addr = free_port();
        let child = Command::new(BIN)
            .args(["serve", "--listen", &addr.to_string(), "--log-path", &log.display().to_string()])
            .args(extra)
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()
            .expect("server starts");
        let server = Server { addr, child };
        let deadline = Instant::now() + Duration::from_secs(20);
        while http(addr, "GET", "/health", None).map(|r| r.0).ok() != Some(200) {
            assert!(Instant::now() < deadline, "server did not become healthy");
            std::thread::sleep(Duration::from_millis(20));
        }
        server
    }

    pub fn request(&self, method: &str, path: &str, body: Option<&str>) -> (u16, String) {
        http(self.addr, method, path, body).expect("request succeeds")
    }

    pub fn create_session(
        &self,
        experiment: &str,
        names: &[&str],
        rankings: &[Vec<String>],
        method: &str,
        credit: &str,
        length: usize,
    ) -> Created {
        let body = serde_json::json!({
            "ranker_names": names,
            "rankings": rankings,
            "method": method,
            "credit": credit,
            "length": length,
        });
        let (status, text) = self.request("POST", &format!("/v1/experiments/{experiment}/sessions"), Some(&body.to_string()));
        assert_eq!(status, 201, "{text}");
        #[derive(Deserialize)]
        struct Raw {
            session_id: String,
            ranking: Vec<RankedItem>,
        }
        let raw: Raw = serde_json::from_str(&text).unwrap();
        Created { session_id: raw.session_id, ranking: raw.ranking.into_iter().map(|r| r.item).collect() }
    }

    pub fn click(&self, session: &str, position: usize, key: &str) -> Vec<f64> {
        let body = serde_json::json!({ "position": position, "idempotency_key": key }).to_string();
        let (status, text) = self.request("POST", &format!("/v1/sessions/{session}/clicks"), Some(&body));
        assert_eq!(status, 200, "{text}");
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        serde_json::from_value(v["credits"].clone()).unwrap()
    }

    pub fn session_credits(&self, session: &str) -> Vec<f64> {
        let (status, text) = self.request("GET", &format!("/v1/sessions/{session}"), None);
        assert_eq!(status, 200, "{text}");
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        serde_json::from_value(v["credits"].clone()).unwrap()
    }

    pub fn results(&self, experiment: &str) -> Results {
        let (status, text) = self.request("GET", &format!("/v1/experiments/{experiment}/results"), None);
        assert_eq!(status, 200, "{text}");
        serde_json::from_str(&text).unwrap()
    }

    /// SIGKILL, no graceful shutdown.
    pub fn kill(mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
