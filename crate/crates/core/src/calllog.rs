//! Call-log ingestion: row parsing, interaction labelling, per-call sessions
//! and the hourly traffic profile used to size exposure inventory.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::{NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default fraction of an item that must be heard for a listen to count as positive.
pub const DEFAULT_HEARD_THRESHOLD: f64 = 0.45;

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S%.f";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Source {
    User,
    Studio,
    Reporter,
}

impl Source {
    pub const ALL: [Source; 3] = [Source::User, Source::Studio, Source::Reporter];

    pub fn as_str(self) -> &'static str {
        match self {
            Source::User => "user",
            Source::Studio => "studio",
            Source::Reporter => "reporter",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "user" | "ugc" => Ok(Source::User),
            "studio" => Ok(Source::Studio),
            "reporter" => Ok(Source::Reporter),
            other => Err(format!("unknown source code {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum KeyPress {
    None,
    Skip,
    Like,
    Forward,
    Comment,
    Record,
    Other,
}

impl KeyPress {
    pub fn as_str(self) -> &'static str {
        match self {
            KeyPress::None => "none",
            KeyPress::Skip => "skip",
            KeyPress::Like => "like",
            KeyPress::Forward => "forward",
            KeyPress::Comment => "comment",
            KeyPress::Record => "record",
            KeyPress::Other => "other",
        }
    }

    /// Like, forward and comment are explicit positive signals.
    pub fn is_positive(self) -> bool {
        matches!(self, KeyPress::Like | KeyPress::Forward | KeyPress::Comment)
    }

    pub fn is_pressed(self) -> bool {
        self != KeyPress::None
    }
}

impl fmt::Display for KeyPress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KeyPress {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "" | "none" | "-" => Ok(KeyPress::None),
            "skip" => Ok(KeyPress::Skip),
            "like" => Ok(KeyPress::Like),
            "forward" => Ok(KeyPress::Forward),
            "comment" => Ok(KeyPress::Comment),
            "record" => Ok(KeyPress::Record),
            "other" => Ok(KeyPress::Other),
            other => Err(format!("unknown key code {other:?}")),
        }
    }
}

/// One row of the call log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ListenEvent {
    pub call_id: String,
    pub caller_id: String,
    pub item_id: String,
    pub contributor_id: String,
    /// Seconds, strictly positive.
    pub item_duration: f64,
    /// Seconds, never more than `item_duration`.
    pub duration_heard: f64,
    pub source: Source,
    pub topic: String,
    /// Aspect label; multi-aspect items separate labels with `|`.
    pub aspect: String,
    pub rating: u8,
    pub key_pressed: KeyPress,
    pub timestamp: NaiveDateTime,
    pub rank_position: Option<u32>,
}

impl ListenEvent {
    pub fn aspect_labels(&self) -> impl Iterator<Item = &str> {
        self.aspect.split('|').map(str::trim).filter(|s| !s.is_empty())
    }

    pub fn heard_fraction(&self) -> Result<f64> {
        if self.item_duration <= 0.0 {
            return Err(Error::ZeroDuration {
                item_id: self.item_id.clone(),
            });
        }
        Ok(self.duration_heard / self.item_duration)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InteractionLabel {
    Positive,
    Negative,
    Neutral,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledEvent {
    pub event: ListenEvent,
    pub label: InteractionLabel,
}

/// Logical call-log fields that a column mapping can bind to header names.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    CallId,
    CallerId,
    ItemId,
    ContributorId,
    ItemDuration,
    DurationHeard,
    Source,
    Topic,
    Aspect,
    Rating,
    KeyPressed,
    Timestamp,
    RankPosition,
}

impl Field {
    pub const REQUIRED: [Field; 12] = [
        Field::CallId,
        Field::CallerId,
        Field::ItemId,
        Field::ContributorId,
        Field::ItemDuration,
        Field::DurationHeard,
        Field::Source,
        Field::Topic,
        Field::Aspect,
        Field::Rating,
        Field::KeyPressed,
        Field::Timestamp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Field::CallId => "call_id",
            Field::CallerId => "caller_id",
            Field::ItemId => "item_id",
            Field::ContributorId => "contributor_id",
            Field::ItemDuration => "item_duration",
            Field::DurationHeard => "duration_heard",
            Field::Source => "source",
            Field::Topic => "topic",
            Field::Aspect => "aspect",
            Field::Rating => "rating",
            Field::KeyPressed => "key_pressed",
            Field::Timestamp => "timestamp",
            Field::RankPosition => "rank_position",
        }
    }
}

/// Delimiter plus a mapping from logical fields to header names.
///
/// Fields left out of `columns` use their canonical snake-case name.
/// `rank_position` is optional in the input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnSchema {
    pub delimiter: char,
    pub columns: BTreeMap<Field, String>,
}

impl Default for ColumnSchema {
    fn default() -> Self {
        ColumnSchema {
            delimiter: ',',
            columns: BTreeMap::new(),
        }
    }
}

impl ColumnSchema {
    pub fn tab_separated() -> Self {
        ColumnSchema {
            delimiter: '\t',
            ..Default::default()
        }
    }

    pub fn header_for(&self, field: Field) -> &str {
        self.columns
            .get(&field)
            .map(String::as_str)
            .unwrap_or_else(|| field.name())
    }

    fn delimiter_byte(&self) -> Result<u8> {
        if self.delimiter.is_ascii() {
            Ok(self.delimiter as u8)
        } else {
            Err(Error::Config(format!(
                "delimiter {:?} is not a single-byte character",
                self.delimiter
            )))
        }
    }
}

/// A rejected input row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowDiagnostic {
    /// 1-based line number in the input, header included.
    pub row: u64,
    pub field: String,
    pub reason: String,
}

impl fmt::Display for RowDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "row={} field={} reason={}", self.row, self.field, self.reason)
    }
}

#[derive(Clone, Debug, Default)]
pub struct ParsedLog {
    pub events: Vec<ListenEvent>,
    pub rejected: Vec<RowDiagnostic>,
}

pub fn parse_timestamp(raw: &str) -> std::result::Result<NaiveDateTime, String> {
    let raw = raw.trim();
    for fmt in [TIMESTAMP_FORMAT, "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M"] {
        if let Ok(ts) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Ok(ts);
        }
    }
    chrono::DateTime::parse_from_rfc3339(raw)
        .map(|dt| dt.naive_utc())
        .map_err(|_| format!("unparseable timestamp {raw:?}"))
}

pub fn format_timestamp(ts: &NaiveDateTime) -> String {
    ts.format(TIMESTAMP_FORMAT).to_string()
}

/// Parses delimited call-log text. Rows that fail validation are collected as
/// diagnostics; a header missing a required column fails the whole input.
pub fn parse_call_logs<R: Read>(input: R, schema: &ColumnSchema) -> Result<ParsedLog> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter_byte()?)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);

    let headers = reader
        .headers()
        .map_err(|e| Error::InvalidInput(format!("unreadable header: {e}")))?
        .clone();
    let position_of = |field: Field| {
        let name = schema.header_for(field);
        headers.iter().position(|h| h == name)
    };
    let mut index = HashMap::new();
    for field in Field::REQUIRED {
        let pos = position_of(field).ok_or_else(|| {
            Error::InvalidInput(format!(
                "header lacks column {:?} for field {}",
                schema.header_for(field),
                field.name()
            ))
        })?;
        index.insert(field, pos);
    }
    if let Some(pos) = position_of(Field::RankPosition) {
        index.insert(Field::RankPosition, pos);
    }

    let mut out = ParsedLog::default();
    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let row = e.position().map(|p| p.line()).unwrap_or(0);
                out.rejected.push(RowDiagnostic {
                    row,
                    field: "*".into(),
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let row = record.position().map(|p| p.line()).unwrap_or(0);
        match event_from_record(&record, &index) {
            Ok(ev) => out.events.push(ev),
            Err((field, reason)) => out.rejected.push(RowDiagnostic {
                row,
                field: field.name().into(),
                reason,
            }),
        }
    }
    Ok(out)
}

type FieldError = (Field, String);

fn event_from_record(
    record: &csv::StringRecord,
    index: &HashMap<Field, usize>,
) -> std::result::Result<ListenEvent, FieldError> {
    let get = |field: Field| -> std::result::Result<&str, FieldError> {
        let pos = index[&field];
        record
            .get(pos)
            .ok_or_else(|| (field, "missing column".to_string()))
    };
    let text = |field: Field| -> std::result::Result<String, FieldError> {
        let v = get(field)?;
        if v.is_empty() {
            Err((field, "empty value".into()))
        } else {
            Ok(v.to_string())
        }
    };
    let seconds = |field: Field| -> std::result::Result<f64, FieldError> {
        let raw = get(field)?;
        let v: f64 = raw
            .parse()
            .map_err(|_| (field, format!("not a number: {raw:?}")))?;
        if !v.is_finite() || v < 0.0 {
            return Err((field, format!("must be a non-negative number, got {raw}")));
        }
        Ok(v)
    };

    let item_duration = seconds(Field::ItemDuration)?;
    if item_duration <= 0.0 {
        return Err((Field::ItemDuration, "must be > 0".into()));
    }
    let duration_heard = seconds(Field::DurationHeard)?;
    if duration_heard > item_duration {
        return Err((
            Field::DurationHeard,
            format!("{duration_heard} exceeds item duration {item_duration}"),
        ));
    }
    let source = get(Field::Source)?
        .parse::<Source>()
        .map_err(|e| (Field::Source, e))?;
    let rating_raw = get(Field::Rating)?;
    let rating: u8 = rating_raw
        .parse()
        .map_err(|_| (Field::Rating, format!("not an integer: {rating_raw:?}")))?;
    if !(1..=5).contains(&rating) {
        return Err((Field::Rating, format!("{rating} outside 1..5")));
    }
    let key_pressed = get(Field::KeyPressed)?
        .parse::<KeyPress>()
        .map_err(|e| (Field::KeyPressed, e))?;
    let timestamp = parse_timestamp(get(Field::Timestamp)?).map_err(|e| (Field::Timestamp, e))?;
    let rank_position = match index.get(&Field::RankPosition) {
        Some(&pos) => match record.get(pos).unwrap_or("") {
            "" => None,
            raw => {
                let r: u32 = raw
                    .parse()
                    .map_err(|_| (Field::RankPosition, format!("not an integer: {raw:?}")))?;
                if r == 0 {
                    return Err((Field::RankPosition, "rank positions start at 1".into()));
                }
                Some(r)
            }
        },
        None => None,
    };

    Ok(ListenEvent {
        call_id: text(Field::CallId)?,
        caller_id: text(Field::CallerId)?,
        item_id: text(Field::ItemId)?,
        contributor_id: text(Field::ContributorId)?,
        item_duration,
        duration_heard,
        source,
        topic: text(Field::Topic)?,
        aspect: text(Field::Aspect)?,
        rating,
        key_pressed,
        timestamp,
        rank_position,
    })
}

/// Writes events with the canonical header; the output parses back with
/// `ColumnSchema::default()`.
pub fn write_events<W: Write>(out: W, events: &[ListenEvent]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<&str> = Field::REQUIRED
        .iter()
        .chain(std::iter::once(&Field::RankPosition))
        .map(|f| f.name())
        .collect();
    let csv_err = |e: csv::Error| Error::InvalidInput(e.to_string());
    w.write_record(&header).map_err(csv_err)?;
    for ev in events {
        w.write_record([
            ev.call_id.clone(),
            ev.caller_id.clone(),
            ev.item_id.clone(),
            ev.contributor_id.clone(),
            ev.item_duration.to_string(),
            ev.duration_heard.to_string(),
            ev.source.to_string(),
            ev.topic.clone(),
            ev.aspect.clone(),
            ev.rating.to_string(),
            ev.key_pressed.to_string(),
            format_timestamp(&ev.timestamp),
            ev.rank_position.map(|r| r.to_string()).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidInput(format!("flush failed: {e}")))?;
    Ok(())
}

/// Labels a single listen from its key press and heard fraction.
///
/// Explicit positive keys or hearing strictly more than `heard_threshold` of
/// the item make the listen positive; a skip makes it negative; anything else
/// carries no signal. Call hang-ups need session context, see [`label_session`].
pub fn label_interaction(event: &ListenEvent, heard_threshold: f64) -> Result<InteractionLabel> {
    if !(heard_threshold > 0.0 && heard_threshold < 1.0) {
        return Err(Error::InvalidInput(format!(
            "heard threshold {heard_threshold} outside (0, 1)"
        )));
    }
    let fraction = event.heard_fraction()?;
    if event.key_pressed.is_positive() || fraction > heard_threshold {
        Ok(InteractionLabel::Positive)
    } else if event.key_pressed == KeyPress::Skip {
        Ok(InteractionLabel::Negative)
    } else {
        Ok(InteractionLabel::Neutral)
    }
}

/// Labels every event of one call. The final event is treated as a hang-up
/// (negative) when it was cut off at or before the threshold without a
/// positive key.
pub fn label_session(session: &Session, heard_threshold: f64) -> Result<Vec<InteractionLabel>> {
    let mut labels = session
        .events
        .iter()
        .map(|ev| label_interaction(ev, heard_threshold))
        .collect::<Result<Vec<_>>>()?;
    if let (Some(last), Some(label)) = (session.events.last(), labels.last_mut()) {
        if *label == InteractionLabel::Neutral && last.heard_fraction()? <= heard_threshold {
            *label = InteractionLabel::Negative;
        }
    }
    Ok(labels)
}

pub fn label_sessions(sessions: &[Session], heard_threshold: f64) -> Result<Vec<LabeledEvent>> {
    let mut out = Vec::new();
    for s in sessions {
        let labels = label_session(s, heard_threshold)?;
        out.extend(
            s.events
                .iter()
                .cloned()
                .zip(labels)
                .map(|(event, label)| LabeledEvent { event, label }),
        );
    }
    Ok(out)
}

/// All listens of one call, ordered by timestamp.
#[derive(Clone, Debug, PartialEq)]
pub struct Session {
    pub call_id: String,
    pub caller_id: String,
    pub events: Vec<ListenEvent>,
}

impl Session {
    pub fn start(&self) -> NaiveDateTime {
        self.events[0].timestamp
    }

    /// Deepest rank reached: the largest logged rank position, or the number
    /// of listens when positions were not logged.
    pub fn depth(&self) -> usize {
        self.events
            .iter()
            .enumerate()
            .map(|(i, ev)| ev.rank_position.map(|r| r as usize).unwrap_or(i + 1))
            .max()
            .unwrap_or(0)
    }
}

/// Groups events by call id. Within a call, events are sorted by timestamp
/// (stable, so equal timestamps keep input order); calls are ordered by start
/// time, then call id.
pub fn assemble_sessions(events: Vec<ListenEvent>) -> Vec<Session> {
    let mut by_call: BTreeMap<String, Vec<ListenEvent>> = BTreeMap::new();
    for ev in events {
        by_call.entry(ev.call_id.clone()).or_default().push(ev);
    }
    let mut sessions: Vec<Session> = by_call
        .into_iter()
        .map(|(call_id, mut events)| {
            events.sort_by_key(|e| e.timestamp);
            Session {
                call_id,
                caller_id: events[0].caller_id.clone(),
                events,
            }
        })
        .collect();
    sessions.sort_by(|a, b| a.start().cmp(&b.start()).then_with(|| a.call_id.cmp(&b.call_id)));
    sessions
}

/// Platform traffic: mean callers per hour of day, and the probability that a
/// caller reaches each rank (index 0 is rank 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrafficProfile {
    pub users_per_hour: Vec<f64>,
    pub rank_reach_prob: Vec<f64>,
}

impl TrafficProfile {
    pub fn new(users_per_hour: Vec<f64>, rank_reach_prob: Vec<f64>) -> Result<Self> {
        let p = TrafficProfile {
            users_per_hour,
            rank_reach_prob,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.users_per_hour.len() != 24 {
            return Err(Error::InvalidInput(format!(
                "users_per_hour needs 24 entries, got {}",
                self.users_per_hour.len()
            )));
        }
        if self.users_per_hour.iter().any(|u| !(u.is_finite() && *u >= 0.0)) {
            return Err(Error::InvalidInput("users_per_hour must be non-negative".into()));
        }
        if self
            .rank_reach_prob
            .iter()
            .any(|p| !(0.0..=1.0).contains(p))
        {
            return Err(Error::InvalidInput("reach probabilities must lie in [0, 1]".into()));
        }
        if self.rank_reach_prob.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidInput(
                "reach probabilities must be non-increasing in rank".into(),
            ));
        }
        Ok(())
    }

    /// Probability of reaching 1-based `rank`; zero beyond the profile.
    pub fn reach(&self, rank: usize) -> f64 {
        if rank == 0 {
            return 1.0;
        }
        self.rank_reach_prob.get(rank - 1).copied().unwrap_or(0.0)
    }

    /// Expected listens per caller on a list of `list_length` items.
    pub fn expected_depth(&self, list_length: usize) -> f64 {
        (1..=list_length).map(|r| self.reach(r)).sum()
    }
}

/// Estimates the traffic profile. The reach vector has `max(max_rank, deepest
/// session)` entries; hour means divide by the inclusive span of calendar days
/// between the first and last session.
pub fn estimate_traffic_profile(sessions: &[Session], max_rank: usize) -> Result<TrafficProfile> {
    if sessions.is_empty() {
        return Err(Error::NoSessions);
    }
    let depths: Vec<usize> = sessions.iter().map(Session::depth).collect();
    let deepest = depths.iter().copied().max().unwrap_or(0).max(max_rank);
    let total = sessions.len() as f64;
    let rank_reach_prob = (1..=deepest)
        .map(|r| depths.iter().filter(|&&d| d >= r).count() as f64 / total)
        .collect();

    let mut callers: BTreeMap<(chrono::NaiveDate, u32), BTreeSet<&str>> = BTreeMap::new();
    for s in sessions {
        let start = s.start();
        callers
            .entry((start.date(), start.hour()))
            .or_default()
            .insert(s.caller_id.as_str());
    }
    let first = sessions.iter().map(|s| s.start().date()).min().unwrap();
    let last = sessions.iter().map(|s| s.start().date()).max().unwrap();
    let days = ((last - first).num_days() + 1) as f64;
    let mut users_per_hour = vec![0.0; 24];
    for ((_, hour), set) in &callers {
        users_per_hour[*hour as usize] += set.len() as f64;
    }
    for u in &mut users_per_hour {
        *u /= days;
    }
    Ok(TrafficProfile {
        users_per_hour,
        rank_reach_prob,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn ts(s: &str) -> NaiveDateTime {
        parse_timestamp(s).unwrap()
    }

    pub(crate) fn event(call: &str, item: &str, heard: f64, key: KeyPress, at: &str) -> ListenEvent {
        ListenEvent {
            call_id: call.into(),
            caller_id: format!("caller-{call}"),
            item_id: item.into(),
            contributor_id: "c1".into(),
            item_duration: 100.0,
            duration_heard: heard,
            source: Source::User,
            topic: "MDD".into(),
            aspect: "A".into(),
            rating: 4,
            key_pressed: key,
            timestamp: ts(at),
            rank_position: None,
        }
    }

    const HEADER: &str = "call_id,caller_id,item_id,contributor_id,item_duration,duration_heard,source,topic,aspect,rating,key_pressed,timestamp";

    #[test]
    fn parses_well_formed_row() {
        let text = format!("{HEADER}\nk1,u1,i1,u9,120,60.5,studio,MDD,myths,5,like,2019-03-01T18:05:00\n");
        let parsed = parse_call_logs(text.as_bytes(), &ColumnSchema::default()).unwrap();
        assert!(parsed.rejected.is_empty());
        let ev = &parsed.events[0];
        assert_eq!(ev.call_id, "k1");
        assert_eq!(ev.caller_id, "u1");
        assert_eq!(ev.item_id, "i1");
        assert_eq!(ev.contributor_id, "u9");
        assert_eq!(ev.item_duration, 120.0);
        assert_eq!(ev.duration_heard, 60.5);
        assert_eq!(ev.source, Source::Studio);
        assert_eq!(ev.topic, "MDD");
        assert_eq!(ev.aspect, "myths");
        assert_eq!(ev.rating, 5);
        assert_eq!(ev.key_pressed, KeyPress::Like);
        assert_eq!(ev.timestamp, ts("2019-03-01T18:05:00"));
        assert_eq!(ev.rank_position, None);
    }

    #[test]
    fn rating_out_of_range_is_rejected_with_row_and_field() {
        let text = format!("{HEADER}\nk1,u1,i1,u9,120,60,user,MDD,a,7,none,2019-03-01T18:05:00\n");
        let parsed = parse_call_logs(text.as_bytes(), &ColumnSchema::default()).unwrap();
        assert!(parsed.events.is_empty());
        assert_eq!(parsed.rejected.len(), 1);
        let d = &parsed.rejected[0];
        assert_eq!(d.row, 2);
        assert_eq!(d.field, "rating");
        assert!(d.to_string().starts_with("row=2 field=rating reason="));
    }

    #[test]
    fn malformed_rows_are_counted_separately() {
        let mut text = format!("{HEADER}\n");
        for i in 0..10 {
            let heard = match i {
                3 => "abc",
                7 => "500",
                _ => "10",
            };
            text.push_str(&format!(
                "k{i},u1,i{i},u9,100,{heard},reporter,MDD,a,3,skip,2019-03-01T18:0{}:00\n",
                i % 10
            ));
        }
        let parsed = parse_call_logs(text.as_bytes(), &ColumnSchema::default()).unwrap();
        assert_eq!(parsed.events.len(), 8);
        assert_eq!(parsed.rejected.len(), 2);
        assert_eq!(parsed.rejected[0].field, "duration_heard");
        assert_eq!(parsed.rejected[1].row, 9);
    }

    #[test]
    fn unknown_codes_are_rejected() {
        let text = format!(
            "{HEADER}\nk1,u1,i1,u9,120,60,alien,MDD,a,3,none,2019-03-01T18:05:00\nk2,u1,i1,u9,120,60,user,MDD,a,3,hash,2019-03-01T18:05:00\n"
        );
        let parsed = parse_call_logs(text.as_bytes(), &ColumnSchema::default()).unwrap();
        let fields: Vec<_> = parsed.rejected.iter().map(|d| d.field.as_str()).collect();
        assert_eq!(fields, ["source", "key_pressed"]);
    }

    #[test]
    fn custom_mapping_and_tabs() {
        let mut schema = ColumnSchema::tab_separated();
        schema.columns.insert(Field::CallId, "Cdr_id".into());
        schema.columns.insert(Field::CallerId, "Caller ID".into());
        let text = "Caller ID\tCdr_id\titem_id\tcontributor_id\titem_duration\tduration_heard\tsource\ttopic\taspect\trating\tkey_pressed\ttimestamp\trank_position\n\
                    u1\tk1\ti1\tu2\t50\t50\tuser\tCF\tb\t2\tforward\t2019-03-01 07:00:00\t3\n";
        let parsed = parse_call_logs(text.as_bytes(), &schema).unwrap();
        assert!(parsed.rejected.is_empty(), "{:?}", parsed.rejected);
        assert_eq!(parsed.events[0].call_id, "k1");
        assert_eq!(parsed.events[0].caller_id, "u1");
        assert_eq!(parsed.events[0].rank_position, Some(3));
    }

    #[test]
    fn missing_header_column_fails_whole_input() {
        let text = "call_id,caller_id\nk1,u1\n";
        assert!(parse_call_logs(text.as_bytes(), &ColumnSchema::default()).is_err());
    }

    #[test]
    fn labels_follow_threshold_and_keys() {
        let pos = event("k", "i", 60.0, KeyPress::None, "2019-01-01T00:00:00");
        assert_eq!(label_interaction(&pos, 0.45).unwrap(), InteractionLabel::Positive);
        let skip = event("k", "i", 10.0, KeyPress::Skip, "2019-01-01T00:00:00");
        assert_eq!(label_interaction(&skip, 0.45).unwrap(), InteractionLabel::Negative);
        let edge = event("k", "i", 45.0, KeyPress::None, "2019-01-01T00:00:00");
        assert_eq!(label_interaction(&edge, 0.45).unwrap(), InteractionLabel::Neutral);
        let liked_early = event("k", "i", 5.0, KeyPress::Forward, "2019-01-01T00:00:00");
        assert_eq!(label_interaction(&liked_early, 0.45).unwrap(), InteractionLabel::Positive);
    }

    #[test]
    fn zero_duration_cannot_be_labelled() {
        let mut ev = event("k", "i", 0.0, KeyPress::None, "2019-01-01T00:00:00");
        ev.item_duration = 0.0;
        assert!(matches!(label_interaction(&ev, 0.45), Err(Error::ZeroDuration { .. })));
    }

    #[test]
    fn hangup_on_final_event_is_negative() {
        let s = Session {
            call_id: "k".into(),
            caller_id: "u".into(),
            events: vec![
                event("k", "i1", 30.0, KeyPress::Other, "2019-01-01T00:00:00"),
                event("k", "i2", 20.0, KeyPress::None, "2019-01-01T00:01:00"),
            ],
        };
        let labels = label_session(&s, 0.45).unwrap();
        assert_eq!(labels, [InteractionLabel::Neutral, InteractionLabel::Negative]);
    }

    #[test]
    fn sessions_partition_and_sort() {
        let events = vec![
            event("b", "i1", 1.0, KeyPress::None, "2019-01-01T10:05:00"),
            event("a", "i2", 1.0, KeyPress::None, "2019-01-01T09:03:00"),
            event("b", "i3", 1.0, KeyPress::None, "2019-01-01T10:01:00"),
            event("a", "i4", 1.0, KeyPress::None, "2019-01-01T09:01:00"),
            event("a", "i5", 1.0, KeyPress::None, "2019-01-01T09:02:00"),
        ];
        let sessions = assemble_sessions(events);
        assert_eq!(sessions.len(), 2);
        assert_eq!(sessions.iter().map(|s| s.events.len()).sum::<usize>(), 5);
        let a: Vec<_> = sessions[0].events.iter().map(|e| e.item_id.as_str()).collect();
        assert_eq!(a, ["i4", "i5", "i2"]);
        let b: Vec<_> = sessions[1].events.iter().map(|e| e.item_id.as_str()).collect();
        assert_eq!(b, ["i3", "i1"]);
        assert!(assemble_sessions(Vec::new()).is_empty());
    }

    fn session_of_depth(call: &str, depth: usize, at: &str) -> Session {
        let events = (0..depth)
            .map(|i| event(call, &format!("i{i}"), 50.0, KeyPress::None, at))
            .collect();
        Session {
            call_id: call.into(),
            caller_id: format!("caller-{call}"),
            events,
        }
    }

    #[test]
    fn reach_probability_counts_sessions_at_or_beyond_rank() {
        let one = estimate_traffic_profile(&[session_of_depth("a", 3, "2019-01-01T18:00:00")], 5).unwrap();
        assert_eq!(one.rank_reach_prob, [1.0, 1.0, 1.0, 0.0, 0.0]);
        let two = estimate_traffic_profile(
            &[
                session_of_depth("a", 1, "2019-01-01T18:00:00"),
                session_of_depth("b", 3, "2019-01-01T18:00:00"),
            ],
            4,
        )
        .unwrap();
        assert_eq!(two.rank_reach_prob, [1.0, 0.5, 0.5, 0.0]);
    }

    #[test]
    fn users_per_hour_counts_distinct_callers_per_day() {
        let sessions: Vec<_> = (0..10)
            .map(|i| session_of_depth(&format!("k{i}"), 1, "2019-01-01T18:20:00"))
            .collect();
        let p = estimate_traffic_profile(&sessions, 1).unwrap();
        assert_eq!(p.users_per_hour[18], 10.0);
        assert_eq!(p.users_per_hour.iter().sum::<f64>(), 10.0);
        assert!(matches!(estimate_traffic_profile(&[], 3), Err(Error::NoSessions)));
    }

    #[test]
    fn written_events_parse_back() {
        let mut ev = event("k", "i", 33.25, KeyPress::Comment, "2019-01-01T00:00:00.5");
        ev.rank_position = Some(2);
        ev.aspect = "a|b".into();
        let mut buf = Vec::new();
        write_events(&mut buf, &[ev.clone()]).unwrap();
        let parsed = parse_call_logs(buf.as_slice(), &ColumnSchema::default()).unwrap();
        assert_eq!(parsed.events, vec![ev]);
    }
}
