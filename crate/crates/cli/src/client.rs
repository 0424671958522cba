//! Scripted participants talking to a running collector over HTTP.

use std::collections::BTreeMap;

use serde::Deserialize;
use thiserror::Error;

use prosodyeval::collector::ResponsePayload;
use prosodyeval::expdesign::ExperimentPlan;
use prosodyeval::simulate::{expected_slot, participant_rng, simulate_response, SimSummary};
use prosodyeval::SimProfile;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("http: {0}")]
    Http(#[from] reqwest::Error),
    #[error("server answered {status}: {body}")]
    Status { status: u16, body: String },
    #[error("{0}")]
    Protocol(String),
}

#[derive(Debug, Deserialize)]
struct Joined {
    session_id: String,
    group: usize,
    n_pages: usize,
}

#[derive(Debug, Deserialize)]
struct PageBody {
    tokens: Vec<String>,
}

async fn checked(resp: reqwest::Response) -> Result<reqwest::Response, ClientError> {
    let status = resp.status();
    if status.is_success() {
        Ok(resp)
    } else {
        let body = resp.text().await.unwrap_or_default();
        Err(ClientError::Status {
            status: status.as_u16(),
            body,
        })
    }
}

/// Run `participants` listeners one after another against `base_url`.
///
/// The server does not reveal which system produced a page, so the client
/// rebuilds it from the plan and the session id.
pub async fn simulate_http(
    base_url: &str,
    plan: &ExperimentPlan,
    participants: usize,
    profile: &SimProfile,
    seed: u64,
) -> Result<SimSummary, ClientError> {
    let http = reqwest::Client::new();
    let base = base_url.trim_end_matches('/');
    let mut per_group = BTreeMap::new();
    let mut records = 0;
    for p in 0..participants as u64 {
        let joined: Joined = checked(
            http.post(format!(
                "{base}/api/experiments/{}/join",
                plan.experiment_id
            ))
            .send()
            .await?,
        )
        .await?
        .json()
        .await?;
        *per_group.entry(joined.group).or_insert(0) += 1;
        for n in 0..joined.n_pages {
            let url = format!("{base}/api/sessions/{}/pages/{n}", joined.session_id);
            let body: PageBody = checked(http.get(&url).send().await?).await?.json().await?;
            let slot =
                expected_slot(plan, joined.group, &joined.session_id, n).ok_or_else(|| {
                    ClientError::Protocol(format!("no page {n} for group {}", joined.group))
                })?;
            let page = &plan.group_pages[&joined.group][slot];
            let text = plan
                .text(&page.text_id)
                .ok_or_else(|| ClientError::Protocol(format!("unknown text {:?}", page.text_id)))?;
            if text.tokens != body.tokens {
                return Err(ClientError::Protocol(format!(
                    "page {n} of session {} does not match the local plan",
                    joined.session_id
                )));
            }
            let mut rng = participant_rng(seed, p, slot);
            let payload: ResponsePayload =
                simulate_response(profile, &plan.task, text, &page.system_id, &mut rng);
            checked(http.post(&url).json(&payload).send().await?).await?;
            records += 1;
        }
    }
    Ok(SimSummary {
        participants,
        records,
        per_group,
    })
}
