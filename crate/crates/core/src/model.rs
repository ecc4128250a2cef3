//! Bargaining records and transcript validation.
//!
//! A [`BargainingRecord`] holds everything that happened during one
//! bilateral bargaining over a single good: who took part, the settled
//! price (or failure), and the list of proposals each side sent.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Absolute tolerance used for every price equality comparison.
pub const PRICE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Seller,
    Purchaser,
}

impl Role {
    pub fn opponent(self) -> Role {
        match self {
            Role::Seller => Role::Purchaser,
            Role::Purchaser => Role::Seller,
        }
    }

    /// True when `a` is at least as good as `b` from this role's point of view.
    pub fn at_least_as_good(self, a: f64, b: f64) -> bool {
        match self {
            Role::Purchaser => a <= b + PRICE_TOLERANCE,
            Role::Seller => a + PRICE_TOLERANCE >= b,
        }
    }

    /// True when `a` is strictly worse than `b` for this role.
    pub fn strictly_worse(self, a: f64, b: f64) -> bool {
        !self.at_least_as_good(a, b)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Seller => f.write_str("seller"),
            Role::Purchaser => f.write_str("purchaser"),
        }
    }
}

impl std::str::FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "seller" | "s" => Ok(Role::Seller),
            "purchaser" | "p" => Ok(Role::Purchaser),
            other => Err(format!("unknown role `{other}` (expected seller|purchaser)")),
        }
    }
}

/// How a party's message list ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EndingFlag {
    /// The other party ended the negotiation.
    #[default]
    None,
    Accept,
    Reject,
}

/// One party's proposals plus its ending message.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "RawMessageLog", into = "RawMessageLog")]
pub struct MessageLog {
    prices: Vec<f64>,
    pub ending: EndingFlag,
}

#[derive(Serialize, Deserialize)]
struct RawMessageLog {
    k: usize,
    prices: Vec<f64>,
    ending: EndingFlag,
}

impl TryFrom<RawMessageLog> for MessageLog {
    type Error = String;

    fn try_from(raw: RawMessageLog) -> Result<Self, Self::Error> {
        if raw.k != raw.prices.len() {
            return Err(format!(
                "proposal count {} does not match {} listed prices",
                raw.k,
                raw.prices.len()
            ));
        }
        Ok(MessageLog { prices: raw.prices, ending: raw.ending })
    }
}

impl From<MessageLog> for RawMessageLog {
    fn from(log: MessageLog) -> Self {
        RawMessageLog { k: log.prices.len(), prices: log.prices, ending: log.ending }
    }
}

impl MessageLog {
    pub fn new(prices: Vec<f64>, ending: EndingFlag) -> Self {
        MessageLog { prices, ending }
    }

    pub fn proposal_count(&self) -> usize {
        self.prices.len()
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn last(&self) -> Option<f64> {
        self.prices.last().copied()
    }

    pub fn push(&mut self, price: f64) {
        self.prices.push(price);
    }
}

/// Settled price of a bargaining, or failure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriceOutcome {
    Agreed(f64),
    Failed,
}

impl PriceOutcome {
    pub fn price(self) -> Option<f64> {
        match self {
            PriceOutcome::Agreed(p) => Some(p),
            PriceOutcome::Failed => None,
        }
    }
}

impl Serialize for PriceOutcome {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            PriceOutcome::Agreed(p) => s.serialize_f64(*p),
            PriceOutcome::Failed => s.serialize_str("FAIL"),
        }
    }
}

impl<'de> Deserialize<'de> for PriceOutcome {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Price(f64),
            Tag(String),
        }
        match Raw::deserialize(d)? {
            Raw::Price(p) => Ok(PriceOutcome::Agreed(p)),
            Raw::Tag(t) if t == "FAIL" => Ok(PriceOutcome::Failed),
            Raw::Tag(t) => {
                Err(serde::de::Error::custom(format!("outcome must be a number or \"FAIL\", got \"{t}\"")))
            }
        }
    }
}

/// How proposals were exchanged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum ExchangeMode {
    /// Classic turn-taking, starting with `opener`.
    Alternating { opener: Role },
    /// Both sides propose each round; a referee forwards the pair at once.
    Mediated,
}

/// A full bargaining over one good between one seller and one purchaser.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BargainingRecord {
    pub good: String,
    pub seller: String,
    pub purchaser: String,
    pub outcome: PriceOutcome,
    pub seller_log: MessageLog,
    pub purchaser_log: MessageLog,
    pub mode: ExchangeMode,
}

impl BargainingRecord {
    pub fn log(&self, role: Role) -> &MessageLog {
        match role {
            Role::Seller => &self.seller_log,
            Role::Purchaser => &self.purchaser_log,
        }
    }

    pub fn log_mut(&mut self, role: Role) -> &mut MessageLog {
        match role {
            Role::Seller => &mut self.seller_log,
            Role::Purchaser => &mut self.purchaser_log,
        }
    }

    /// `(own, opponent)` proposal counts seen from `role`.
    pub fn counts_for(&self, role: Role) -> (usize, usize) {
        (self.log(role).proposal_count(), self.log(role.opponent()).proposal_count())
    }

    pub fn total_messages(&self) -> usize {
        self.seller_log.proposal_count() + self.purchaser_log.proposal_count()
    }

    /// One JSON object, no trailing newline.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("records always serialize")
    }

    pub fn from_json_line(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line)
    }
}

/// Parses a JSON-lines stream of records, skipping blank and `#` lines.
pub fn read_records(text: &str) -> Result<Vec<BargainingRecord>, serde_json::Error> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(BargainingRecord::from_json_line)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonPositivePrice { role: Role, index: usize },
    MonotonicConcession { role: Role, index: usize },
    DualEnding,
    AgreementWithoutAccept,
    SettledPriceMismatch { expected: f64, actual: f64 },
    CountImbalance { seller: usize, purchaser: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositivePrice { role, index } => {
                write!(f, "non-positive price, {role} index {index}")
            }
            Violation::MonotonicConcession { role, index } => {
                write!(f, "monotonic concession, {role} index {index}")
            }
            Violation::DualEnding => f.write_str("dual ending"),
            Violation::AgreementWithoutAccept => f.write_str("agreement without accept"),
            Violation::SettledPriceMismatch { expected, actual } => {
                write!(f, "settled price mismatch: expected {expected}, recorded {actual}")
            }
            Violation::CountImbalance { seller, purchaser } => {
                write!(f, "proposal count imbalance: seller {seller}, purchaser {purchaser}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// A party proposed exactly the same price twice in a row.
    RepeatedPrice { role: Role, index: usize },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Validation {
    pub violations: Vec<Violation>,
    pub warnings: Vec<Warning>,
}

impl Validation {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    0.5 * (a + b)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= PRICE_TOLERANCE
}

/// Checks every structural invariant of a record.
pub fn validate_record(record: &BargainingRecord) -> Validation {
    let mut out = Validation::default();

    for role in [Role::Purchaser, Role::Seller] {
        let prices = record.log(role).prices();
        for (i, &p) in prices.iter().enumerate() {
            if !(p > 0.0) || !p.is_finite() {
                out.violations.push(Violation::NonPositivePrice { role, index: i });
            }
        }
        for i in 1..prices.len() {
            // each new proposal must be at least as good for the opponent
            let (prev, cur) = (prices[i - 1], prices[i]);
            let wrong_direction = match role {
                Role::Purchaser => cur < prev - PRICE_TOLERANCE,
                Role::Seller => cur > prev + PRICE_TOLERANCE,
            };
            if wrong_direction {
                out.violations.push(Violation::MonotonicConcession { role, index: i });
            } else if close(cur, prev) {
                out.warnings.push(Warning::RepeatedPrice { role, index: i });
            }
        }
    }

    let s_end = record.seller_log.ending;
    let p_end = record.purchaser_log.ending;
    let (ks, kp) = (record.seller_log.proposal_count(), record.purchaser_log.proposal_count());
    let dual = s_end != EndingFlag::None && p_end != EndingFlag::None;
    // simultaneous endings are legitimate only when a referee forwards both moves
    let simultaneous = record.mode == ExchangeMode::Mediated && s_end == p_end;
    if dual && !simultaneous {
        out.violations.push(Violation::DualEnding);
    }

    match record.mode {
        ExchangeMode::Alternating { opener } => {
            let k_open = record.log(opener).proposal_count();
            let k_other = record.log(opener.opponent()).proposal_count();
            if !(k_open == k_other || k_open == k_other + 1) {
                out.violations.push(Violation::CountImbalance { seller: ks, purchaser: kp });
            }
        }
        ExchangeMode::Mediated => {
            if ks != kp {
                out.violations.push(Violation::CountImbalance { seller: ks, purchaser: kp });
            }
        }
    }

    if let PriceOutcome::Agreed(price) = record.outcome {
        let acceptors: Vec<Role> = [Role::Purchaser, Role::Seller]
            .into_iter()
            .filter(|r| record.log(*r).ending == EndingFlag::Accept)
            .collect();
        let expected = match acceptors.as_slice() {
            [] => {
                out.violations.push(Violation::AgreementWithoutAccept);
                None
            }
            [acceptor] => record.log(acceptor.opponent()).last(),
            _ => match (record.purchaser_log.last(), record.seller_log.last()) {
                (Some(p), Some(s)) => Some(midpoint(p, s)),
                _ => None,
            },
        };
        match expected {
            Some(e) if !close(e, price) => {
                out.violations.push(Violation::SettledPriceMismatch { expected: e, actual: price });
            }
            None if !acceptors.is_empty() => {
                out.violations.push(Violation::SettledPriceMismatch { expected: f64::NAN, actual: price });
            }
            _ => {}
        }
    }

    out
}

/// A single message in a transcript.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Message {
    Proposal(f64),
    End(EndingFlag),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub role: Role,
    pub message: Message,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TranscriptStep {
    Single(Event),
    /// Purchaser event first, then seller.
    Simultaneous(Event, Event),
}

#[derive(Debug, thiserror::Error)]
#[error("record is malformed: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct MalformedRecord(pub Vec<Violation>);

/// Orders the two logs into the sequence of events a bystander would see.
pub fn interleave(record: &BargainingRecord) -> Result<Vec<TranscriptStep>, MalformedRecord> {
    let v = validate_record(record);
    if !v.is_ok() {
        return Err(MalformedRecord(v.violations));
    }
    let mut steps = Vec::with_capacity(record.total_messages() + 2);
    let proposal = |role: Role, price: f64| Event { role, message: Message::Proposal(price) };

    match record.mode {
        ExchangeMode::Alternating { opener } => {
            let first = record.log(opener).prices();
            let second = record.log(opener.opponent()).prices();
            for (i, &price) in first.iter().enumerate() {
                steps.push(TranscriptStep::Single(proposal(opener, price)));
                if let Some(&p) = second.get(i) {
                    steps.push(TranscriptStep::Single(proposal(opener.opponent(), p)));
                }
            }
            for role in [opener, opener.opponent()] {
                let ending = record.log(role).ending;
                if ending != EndingFlag::None {
                    steps.push(TranscriptStep::Single(Event { role, message: Message::End(ending) }));
                }
            }
        }
        ExchangeMode::Mediated => {
            let ps = record.purchaser_log.prices();
            let ss = record.seller_log.prices();
            for (p, s) in ps.iter().zip(ss) {
                steps.push(TranscriptStep::Simultaneous(
                    proposal(Role::Purchaser, *p),
                    proposal(Role::Seller, *s),
                ));
            }
            let pe = record.purchaser_log.ending;
            let se = record.seller_log.ending;
            let end = |role, e| Event { role, message: Message::End(e) };
            match (pe != EndingFlag::None, se != EndingFlag::None) {
                (true, true) => {
                    steps.push(TranscriptStep::Simultaneous(end(Role::Purchaser, pe), end(Role::Seller, se)))
                }
                (true, false) => steps.push(TranscriptStep::Single(end(Role::Purchaser, pe))),
                (false, true) => steps.push(TranscriptStep::Single(end(Role::Seller, se))),
                (false, false) => {}
            }
        }
    }
    Ok(steps)
}

/// Rebuilds `(seller_log, purchaser_log)` from a transcript.
pub fn split_transcript(steps: &[TranscriptStep]) -> (MessageLog, MessageLog) {
    let mut seller = MessageLog::default();
    let mut purchaser = MessageLog::default();
    let mut apply = |e: &Event| {
        let log = match e.role {
            Role::Seller => &mut seller,
            Role::Purchaser => &mut purchaser,
        };
        match e.message {
            Message::Proposal(p) => log.push(p),
            Message::End(flag) => log.ending = flag,
        }
    };
    for step in steps {
        match step {
            TranscriptStep::Single(e) => apply(e),
            TranscriptStep::Simultaneous(a, b) => {
                apply(a);
                apply(b);
            }
        }
    }
    (seller, purchaser)
}
