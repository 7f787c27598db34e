//! Paginated SPARQL fetching over HTTP.
//!
//! The analytical pipeline itself is fully offline; this module is the one
//! place that talks to the network, so everything else stays testable with
//! recorded fixtures. Requests run sequentially out of politeness to public
//! endpoints, and every request is logged with its timing.
//!
//! Result rows use the SPARQL 1.1 JSON results format. Rows binding `source`
//! and `target` become influence edges; rows binding `id` (optionally
//! `label`, `birth`, `death`) become raw actor records.

use std::thread::sleep;
use std::time::{Duration, Instant};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::ingest::{RawActorRecord, RejectedRow};
use crate::model::InfluenceEdge;

/// HTTP verb used for the query request.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HttpMethod {
    #[default]
    Get,
    Post,
}

/// Connection settings for a SPARQL endpoint.
#[derive(Clone, Debug, serde::Serialize, Deserialize)]
pub struct SparqlClient {
    pub endpoint: String,
    #[serde(default)]
    pub method: HttpMethod,
    #[serde(default = "default_page_size")]
    pub page_size: u32,
    /// Attempts per page before giving up (bounded exponential backoff).
    #[serde(default = "default_max_attempts")]
    pub max_attempts: u32,
    /// Base backoff delay; attempt `k` waits `retry_base_ms * 2^(k-1)`.
    #[serde(default = "default_retry_base_ms")]
    pub retry_base_ms: u64,
}

fn default_page_size() -> u32 {
    1000
}

fn default_max_attempts() -> u32 {
    3
}

fn default_retry_base_ms() -> u64 {
    250
}

impl SparqlClient {
    pub fn new(endpoint: impl Into<String>) -> Self {
        SparqlClient {
            endpoint: endpoint.into(),
            method: HttpMethod::Get,
            page_size: default_page_size(),
            max_attempts: default_max_attempts(),
            retry_base_ms: default_retry_base_ms(),
        }
    }
}

/// Accumulated result of a paginated fetch.
#[derive(Clone, Debug, Default)]
pub struct SparqlFetch {
    pub actors: Vec<RawActorRecord>,
    pub edges: Vec<InfluenceEdge>,
    pub rejects: Vec<RejectedRow>,
    pub pages: u32,
    pub requests: u32,
}

#[derive(Deserialize)]
struct SparqlResults {
    results: SparqlBindings,
}

#[derive(Deserialize)]
struct SparqlBindings {
    bindings: Vec<serde_json::Map<String, serde_json::Value>>,
}

fn binding_value(row: &serde_json::Map<String, serde_json::Value>, var: &str) -> Option<String> {
    row.get(var)?.get("value")?.as_str().map(str::to_owned)
}

/// Fetch all pages of a query template until an empty page is returned.
///
/// The template must contain `{limit}` and `{offset}` placeholders; each page
/// substitutes `page_size` and the running offset. Failed requests retry with
/// bounded exponential backoff before the fetch fails as a whole. Malformed
/// rows (missing or empty required bindings) are collected into the rejects
/// report rather than aborting.
pub fn fetch_sparql(client: &SparqlClient, query_template: &str) -> Result<SparqlFetch> {
    for placeholder in ["{limit}", "{offset}"] {
        if !query_template.contains(placeholder) {
            return Err(Error::Config(format!(
                "query template is missing the {placeholder} placeholder"
            )));
        }
    }

    let mut fetch = SparqlFetch::default();
    let mut offset: u64 = 0;
    loop {
        let query = query_template
            .replace("{limit}", &client.page_size.to_string())
            .replace("{offset}", &offset.to_string());
        let body = request_with_retry(client, &query, &mut fetch.requests)?;
        let parsed: SparqlResults = serde_json::from_str(&body).map_err(|e| Error::Fetch {
            attempts: 1,
            message: format!("invalid SPARQL JSON at offset {offset}: {e}"),
        })?;
        let rows = parsed.results.bindings;
        if rows.is_empty() {
            break;
        }
        fetch.pages += 1;
        for (i, row) in rows.iter().enumerate() {
            let line = offset + i as u64 + 1;
            if row.contains_key("source") || row.contains_key("target") {
                let source = binding_value(row, "source").unwrap_or_default();
                let target = binding_value(row, "target").unwrap_or_default();
                if source.is_empty() || target.is_empty() {
                    fetch.rejects.push(RejectedRow {
                        file: client.endpoint.clone(),
                        line,
                        reason: "empty edge endpoint binding".into(),
                    });
                } else {
                    fetch.edges.push(InfluenceEdge::new(source, target));
                }
            } else if row.contains_key("id") {
                let id = binding_value(row, "id").unwrap_or_default();
                if id.is_empty() {
                    fetch.rejects.push(RejectedRow {
                        file: client.endpoint.clone(),
                        line,
                        reason: "empty id binding".into(),
                    });
                    continue;
                }
                let year = |var: &str| binding_value(row, var).and_then(|v| v.parse::<i32>().ok());
                fetch.actors.push(RawActorRecord {
                    id: id.clone(),
                    label: binding_value(row, "label").unwrap_or(id),
                    birth_year: year("birth"),
                    death_year: year("death"),
                });
            } else {
                fetch.rejects.push(RejectedRow {
                    file: client.endpoint.clone(),
                    line,
                    reason: "row binds neither an edge nor an actor".into(),
                });
            }
        }
        offset += client.page_size as u64;
    }
    Ok(fetch)
}

fn request_with_retry(client: &SparqlClient, query: &str, requests: &mut u32) -> Result<String> {
    let mut last_error = String::new();
    for attempt in 1..=client.max_attempts {
        *requests += 1;
        let started = Instant::now();
        let outcome = execute(client, query);
        let elapsed = started.elapsed();
        match outcome {
            Ok(body) => {
                log::info!(
                    "sparql request to {} ({} bytes) in {:?}",
                    client.endpoint,
                    body.len(),
                    elapsed
                );
                return Ok(body);
            }
            Err(message) => {
                log::warn!(
                    "sparql attempt {attempt}/{} to {} failed in {elapsed:?}: {message}",
                    client.max_attempts,
                    client.endpoint
                );
                last_error = message;
                if attempt < client.max_attempts {
                    sleep(Duration::from_millis(client.retry_base_ms << (attempt - 1)));
                }
            }
        }
    }
    Err(Error::Fetch { attempts: client.max_attempts, message: last_error })
}

fn execute(client: &SparqlClient, query: &str) -> std::result::Result<String, String> {
    let response = match client.method {
        HttpMethod::Get => ureq::get(&client.endpoint)
            .query("query", query)
            .query("format", "json")
            .header("Accept", "application/sparql-results+json")
            .call(),
        HttpMethod::Post => ureq::post(&client.endpoint)
            .header("Accept", "application/sparql-results+json")
            .send_form([("query", query), ("format", "json")]),
    };
    match response {
        Ok(mut r) => r.body_mut().read_to_string().map_err(|e| e.to_string()),
        Err(e) => Err(e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Read, Write};
    use std::net::TcpListener;
    use std::sync::atomic::{AtomicU32, Ordering};
    use std::sync::Arc;

    /// Minimal one-request-per-connection HTTP server driven by a closure
    /// from request count to response body (None means HTTP 500).
    fn serve(responder: impl Fn(u32) -> Option<String> + Send + 'static) -> (String, Arc<AtomicU32>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let endpoint = format!("http://{}/sparql", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicU32::new(0));
        let hits_clone = Arc::clone(&hits);
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { break };
                let mut buf = [0u8; 4096];
                let mut request = Vec::new();
                while !request.windows(4).any(|w| w == b"\r\n\r\n") {
                    match stream.read(&mut buf) {
                        Ok(0) | Err(_) => break,
                        Ok(n) => request.extend_from_slice(&buf[..n]),
                    }
                }
                let n = hits_clone.fetch_add(1, Ordering::SeqCst);
                let reply = match responder(n) {
                    Some(body) => format!(
                        "HTTP/1.1 200 OK\r\nContent-Type: application/sparql-results+json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                        body.len(),
                        body
                    ),
                    None => "HTTP/1.1 500 Internal Server Error\r\nContent-Length: 0\r\nConnection: close\r\n\r\n".to_string(),
                };
                let _ = stream.write_all(reply.as_bytes());
            }
        });
        (endpoint, hits)
    }

    fn edge_page(rows: usize, offset: usize) -> String {
        let bindings: Vec<String> = (0..rows)
            .map(|i| {
                format!(
                    r#"{{"source":{{"type":"uri","value":"s{0}"}},"target":{{"type":"uri","value":"t{0}"}}}}"#,
                    offset + i
                )
            })
            .collect();
        format!(
            r#"{{"head":{{"vars":["source","target"]}},"results":{{"bindings":[{}]}}}}"#,
            bindings.join(",")
        )
    }

    fn client(endpoint: String) -> SparqlClient {
        SparqlClient {
            endpoint,
            method: HttpMethod::Get,
            page_size: 100,
            max_attempts: 3,
            retry_base_ms: 1,
        }
    }

    const TEMPLATE: &str = "SELECT ?source ?target WHERE { ?source <influences> ?target } LIMIT {limit} OFFSET {offset}";

    #[test]
    fn fetch_accumulates_pages_until_empty() {
        let (endpoint, _) = serve(|n| {
            Some(match n {
                0 => edge_page(100, 0),
                1 => edge_page(100, 100),
                _ => edge_page(0, 0),
            })
        });
        let fetch = fetch_sparql(&client(endpoint), TEMPLATE).unwrap();
        assert_eq!(fetch.edges.len(), 200);
        assert_eq!(fetch.pages, 2);
        assert_eq!(fetch.requests, 3);
    }

    #[test]
    fn fetch_fails_after_three_attempts() {
        let (endpoint, hits) = serve(|_| None);
        match fetch_sparql(&client(endpoint), TEMPLATE) {
            Err(Error::Fetch { attempts: 3, .. }) => {}
            other => panic!("expected fetch error after retries, got {other:?}"),
        }
        assert_eq!(hits.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn rows_with_empty_subject_are_rejected() {
        let body = r#"{"head":{"vars":["source","target"]},"results":{"bindings":[
            {"source":{"type":"uri","value":""},"target":{"type":"uri","value":"t"}},
            {"source":{"type":"uri","value":"s"},"target":{"type":"uri","value":"t"}}
        ]}}"#
        .to_string();
        let (endpoint, _) = serve(move |n| Some(if n == 0 { body.clone() } else { edge_page(0, 0) }));
        let fetch = fetch_sparql(&client(endpoint), TEMPLATE).unwrap();
        assert_eq!(fetch.edges.len(), 1);
        assert_eq!(fetch.rejects.len(), 1);
        assert!(fetch.rejects[0].reason.contains("empty edge endpoint"));
    }

    #[test]
    fn actor_rows_map_to_records() {
        let body = r#"{"head":{"vars":["id"]},"results":{"bindings":[
            {"id":{"type":"literal","value":"q1"},"label":{"type":"literal","value":"Kant"},
             "birth":{"type":"literal","value":"1724"},"death":{"type":"literal","value":"1804"}}
        ]}}"#
        .to_string();
        let (endpoint, _) = serve(move |n| Some(if n == 0 { body.clone() } else { edge_page(0, 0) }));
        let fetch = fetch_sparql(&client(endpoint), TEMPLATE).unwrap();
        assert_eq!(fetch.actors.len(), 1);
        assert_eq!(fetch.actors[0].label, "Kant");
        assert_eq!(fetch.actors[0].birth_year, Some(1724));
    }

    #[test]
    fn template_must_contain_placeholders() {
        let c = client("http://127.0.0.1:1/sparql".into());
        assert!(matches!(fetch_sparql(&c, "SELECT * WHERE {}"), Err(Error::Config(_))));
    }
}
