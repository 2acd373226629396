use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{fill, Claim, DatumIndex, DatumKind, CROSS, SYSTEM};
use crate::evidence::StudentId;
use crate::provider::{json_block, ProviderError, ProviderRequest, Purpose, Session};

/// A quoted value may differ from the recorded one by rounding to two
/// decimals.
pub const VALUE_TOLERANCE: f64 = 0.005 + 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClaimStatus {
    Supported,
    Removed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationEntry {
    pub claim: Claim,
    pub status: ClaimStatus,
    /// Ref of the datum that supports the claim; set only when supported.
    pub supporting_datum: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

fn removed(claim: &Claim, reason: String) -> ValidationEntry {
    ValidationEntry {
        claim: claim.clone(),
        status: ClaimStatus::Removed,
        supporting_datum: None,
        reason: Some(reason),
    }
}

/// Referential pass. Its removals are final.
pub fn check_claim(claim: &Claim, roster: &[StudentId], index: &DatumIndex) -> ValidationEntry {
    if !roster.iter().any(|s| s.as_str() == claim.subject) {
        return removed(claim, format!("subject {:?} is not on the roster", claim.subject));
    }
    let Some(datum) = index.get(&claim.datum_ref) else {
        return removed(claim, format!("datum {:?} does not exist in this run", claim.datum_ref));
    };
    if datum.student.as_str() != claim.subject {
        return removed(claim, format!("datum {:?} concerns {}", claim.datum_ref, datum.student));
    }
    let predicate_ok = match (claim.predicate.as_str(), &datum.kind) {
        ("flagged", DatumKind::Marker { .. }) => true,
        ("scored", DatumKind::Base { .. } | DatumKind::Objective { .. } | DatumKind::Metric { .. }) => true,
        ("adjusted", DatumKind::Adjustment) => true,
        _ => false,
    };
    if !predicate_ok {
        return removed(
            claim,
            format!("predicate {:?} cannot cite {:?}", claim.predicate, claim.datum_ref),
        );
    }
    if let Some(v) = claim.value {
        if !v.is_finite() || (v - datum.value).abs() > VALUE_TOLERANCE {
            return removed(claim, format!("quoted value {v} does not match recorded {}", datum.value));
        }
    }
    ValidationEntry {
        claim: claim.clone(),
        status: ClaimStatus::Supported,
        supporting_datum: Some(claim.datum_ref.clone()),
        reason: None,
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Verdicts {
    verdicts: Vec<Verdict>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Verdict {
    index: usize,
    supported: bool,
}

fn parse_verdicts(text: &str, expected: &BTreeSet<usize>) -> Result<Vec<Verdict>, String> {
    let body = json_block(text).ok_or("response holds no JSON object")?;
    let v: Verdicts = serde_json::from_str(body).map_err(|e| e.to_string())?;
    let seen: BTreeSet<usize> = v.verdicts.iter().map(|x| x.index).collect();
    if seen != *expected || v.verdicts.len() != expected.len() {
        return Err("verdicts must cover every claim index exactly once".into());
    }
    Ok(v.verdicts)
}

/// Provider pass over the claims that survived the referential check. It
/// runs even when none survived, so that a missing validator always
/// withholds the judgment.
pub fn cross_examine(log: &mut [ValidationEntry], index: &DatumIndex, session: &Session) -> Result<(), ProviderError> {
    let candidates: Vec<(usize, &ValidationEntry)> = log
        .iter()
        .enumerate()
        .filter(|(_, e)| e.status == ClaimStatus::Supported)
        .collect();
    let expected: BTreeSet<usize> = candidates.iter().map(|(i, _)| *i).collect();
    let claims: Vec<_> = candidates
        .iter()
        .map(|(i, e)| {
            json!({
                "index": i,
                "subject": e.claim.subject,
                "predicate": e.claim.predicate,
                "datum_ref": e.claim.datum_ref,
                "value": e.claim.value,
                "datum": index.get(&e.claim.datum_ref),
            })
        })
        .collect();
    let user = fill(
        CROSS,
        &[("data", serde_json::to_string_pretty(&json!({ "claims": claims })).unwrap_or_default())],
    );
    let request = ProviderRequest::completion(Purpose::CrossExamine, SYSTEM, user, 1024);
    let verdicts = session.send_parsed(&request, |t| parse_verdicts(t, &expected))?;
    for v in verdicts.into_iter().filter(|v| !v.supported) {
        let entry = &mut log[v.index];
        entry.status = ClaimStatus::Removed;
        entry.supporting_datum = None;
        entry.reason = Some("not supported on cross-examination".into());
    }
    Ok(())
}
