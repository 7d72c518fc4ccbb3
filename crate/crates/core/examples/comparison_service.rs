//! Drive the comparison service in-process: open a session, click, read results.
//!
//! `multileave serve --log-path events.jsonl` exposes the same store over HTTP:
//!
//! ```text
//! POST /v1/experiments/{eid}/sessions   {"ranker_names": [...], "rankings": [[...]], "method": "gom", "credit": "personalization", "length": 10}
//! POST /v1/sessions/{sid}/clicks        {"position": 1, "idempotency_key": "evt-1"}
//! GET  /v1/experiments/{eid}/results
//! ```

use multileave::service::{NewSession, ServiceConfig, Store};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("multileave-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let config = ServiceConfig { log_path: Some(dir.join("events.jsonl")), ..ServiceConfig::default() };
    let store = Store::open(config.clone())?;

    let names: Vec<String> = ["news-v1", "news-v2", "news-v3"].map(String::from).to_vec();
    let rankings = vec![
        ["a", "b", "c", "d", "e"].map(String::from).to_vec(),
        ["b", "a", "d", "c", "e"].map(String::from).to_vec(),
        ["e", "d", "c", "b", "a"].map(String::from).to_vec(),
    ];
    for user in 0..3 {
        let session = store.create_session(
            "homepage",
            NewSession { ranker_names: names.clone(), rankings: rankings.clone(), method: None, credit: None, length: Some(4) },
        )?;
        let shown: Vec<&str> = session.ranking.iter().map(|r| r.item.as_str()).collect();
        println!("user {user} sees {shown:?}");
        let ack = store.record_click(&session.session_id, 1, Some(&format!("user-{user}-click")))?;
        println!("  credits after click {:?}", ack.credits);
    }

    // Reopening replays the log.
    drop(store);
    let reopened = Store::open(config)?;
    let results = reopened.results("homepage")?;
    println!("totals {:?} over {} clicks", results.rankers.iter().zip(&results.totals).collect::<Vec<_>>(), results.clicks);
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
