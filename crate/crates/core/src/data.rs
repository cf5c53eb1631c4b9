//! Hourly substation time series: records, calendar features, CSV ingestion
//! and chronological splitting.
//!
//! All timestamps are UTC epoch seconds. Units are fixed: kW for heat,
//! °C for temperatures, W/m² for radiance and m/s for wind speed.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime, TimeZone, Timelike, Utc, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed sampling interval of every dataset, in seconds.
pub const SAMPLING_INTERVAL_SECS: i64 = 3600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DayType {
    Weekday = 1,
    WeekendHoliday = 2,
}

impl DayType {
    /// Zero-based index used for per-day-type parameter blocks.
    pub fn index(self) -> usize {
        match self {
            DayType::Weekday => 0,
            DayType::WeekendHoliday => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            DayType::Weekday
        } else {
            DayType::WeekendHoliday
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalendarFeatures {
    pub timestamp: i64,
    pub hour: u32,
    pub day_type: DayType,
    pub day_of_year: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherRecord {
    pub ambient_temperature: f64,
    pub global_radiance: f64,
    pub wind_speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubstationRecord {
    pub heat_load: f64,
    pub supply_temperature: f64,
    pub return_temperature: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub calendar: CalendarFeatures,
    pub weather: WeatherRecord,
    pub substation: SubstationRecord,
}

impl Record {
    pub fn timestamp(&self) -> i64 {
        self.calendar.timestamp
    }
}

/// Set of public holidays, treated like weekend days.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HolidayCalendar(BTreeSet<NaiveDate>);

impl HolidayCalendar {
    pub fn new(dates: impl IntoIterator<Item = NaiveDate>) -> Self {
        Self(dates.into_iter().collect())
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.0.contains(&date)
    }

    pub fn insert(&mut self, date: NaiveDate) {
        self.0.insert(date);
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &NaiveDate> {
        self.0.iter()
    }
}

pub fn utc(timestamp: i64) -> DateTime<Utc> {
    Utc.timestamp_opt(timestamp, 0).single().unwrap_or_else(|| DateTime::<Utc>::from_timestamp(0, 0).expect("epoch"))
}

/// Hour of day, day type and day of year for a UTC timestamp.
pub fn derive_calendar(timestamp: i64, holidays: &HolidayCalendar) -> CalendarFeatures {
    let t = utc(timestamp);
    let date = t.date_naive();
    let weekend = matches!(date.weekday(), Weekday::Sat | Weekday::Sun);
    let day_type = if weekend || holidays.contains(date) { DayType::WeekendHoliday } else { DayType::Weekday };
    CalendarFeatures { timestamp, hour: t.hour(), day_type, day_of_year: date.ordinal() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DataWarning {
    /// Missing hourly samples between two consecutive rows.
    Gap {
        after: i64,
        missing: Vec<i64>,
    },
    SupplyBelowReturn {
        timestamp: i64,
    },
    NegativeLoad {
        timestamp: i64,
    },
}

impl std::fmt::Display for DataWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DataWarning::Gap { after, missing } => {
                write!(f, "{} missing hour(s) after {}", missing.len(), format_timestamp(*after))
            }
            DataWarning::SupplyBelowReturn { timestamp } => {
                write!(f, "supply temperature below return temperature at {}", format_timestamp(*timestamp))
            }
            DataWarning::NegativeLoad { timestamp } => {
                write!(f, "negative heat load at {}", format_timestamp(*timestamp))
            }
        }
    }
}

/// Ordered hourly rows. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    records: Vec<Record>,
    warnings: Vec<DataWarning>,
}

impl Dataset {
    /// Validates ordering and finiteness; gaps and implausible substation
    /// readings become warnings.
    pub fn from_records(records: Vec<Record>) -> Result<Self> {
        let mut warnings = Vec::new();
        for (i, r) in records.iter().enumerate() {
            let values = [
                r.weather.ambient_temperature,
                r.weather.global_radiance,
                r.weather.wind_speed,
                r.substation.heat_load,
                r.substation.supply_temperature,
                r.substation.return_temperature,
            ];
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteInput);
            }
            if i > 0 {
                let prev = records[i - 1].timestamp();
                let cur = r.timestamp();
                if cur <= prev {
                    return Err(Error::NonMonotonicTimestamps { timestamp: cur });
                }
                if cur - prev > SAMPLING_INTERVAL_SECS {
                    let missing = (1..).map(|m| prev + m * SAMPLING_INTERVAL_SECS).take_while(|&t| t < cur).collect();
                    warnings.push(DataWarning::Gap { after: prev, missing });
                }
            }
            if r.substation.supply_temperature < r.substation.return_temperature {
                warnings.push(DataWarning::SupplyBelowReturn { timestamp: r.timestamp() });
            }
            if r.substation.heat_load < 0.0 {
                warnings.push(DataWarning::NegativeLoad { timestamp: r.timestamp() });
            }
        }
        Ok(Self { records, warnings })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn warnings(&self) -> &[DataWarning] {
        &self.warnings
    }

    pub fn gap_count(&self) -> usize {
        self.warnings.iter().filter(|w| matches!(w, DataWarning::Gap { .. })).count()
    }

    pub fn is_contiguous(&self) -> bool {
        self.gap_count() == 0
    }

    pub fn ensure_contiguous(&self) -> Result<()> {
        match self.gap_count() {
            0 => Ok(()),
            count => Err(Error::DatasetHasGaps { count }),
        }
    }

    pub fn first_timestamp(&self) -> Option<i64> {
        self.records.first().map(Record::timestamp)
    }

    pub fn last_timestamp(&self) -> Option<i64> {
        self.records.last().map(Record::timestamp)
    }

    pub fn timestamps(&self) -> Vec<i64> {
        self.records.iter().map(Record::timestamp).collect()
    }

    pub fn heat_load(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.substation.heat_load).collect()
    }

    pub fn ambient_temperature(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.weather.ambient_temperature).collect()
    }

    /// Rows `range` as a new dataset.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Dataset {
        Dataset::from_records(self.records[range].to_vec()).expect("sub-slice of a valid dataset")
    }

    /// Appends `later` after `self`; the result must still be ordered.
    pub fn concat(&self, later: &Dataset) -> Result<Dataset> {
        let mut records = self.records.clone();
        records.extend_from_slice(&later.records);
        Dataset::from_records(records)
    }
}

/// Chronological split: rows strictly before `boundary` go to the first half.
pub fn split_train_test(ds: &Dataset, boundary: i64) -> Result<(Dataset, Dataset)> {
    match ds.last_timestamp() {
        Some(last) if boundary <= last => {}
        _ => return Err(Error::BoundaryOutOfRange { boundary }),
    }
    let cut = ds.records.partition_point(|r| r.timestamp() < boundary);
    Ok((ds.slice(0..cut), ds.slice(cut..ds.len())))
}

/// Column names used to locate each field in a CSV file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnSchema {
    pub timestamp: String,
    pub ambient_temperature: String,
    pub global_radiance: String,
    pub wind_speed: String,
    pub heat_load: String,
    pub supply_temperature: String,
    pub return_temperature: String,
}

impl Default for ColumnSchema {
    fn default() -> Self {
        Self {
            timestamp: "timestamp".into(),
            ambient_temperature: "ambient_temperature".into(),
            global_radiance: "global_radiance".into(),
            wind_speed: "wind_speed".into(),
            heat_load: "heat_load".into(),
            supply_temperature: "supply_temperature".into(),
            return_temperature: "return_temperature".into(),
        }
    }
}

/// Accepts epoch seconds or ISO-8601 (with or without offset; naive times are UTC).
pub fn parse_timestamp(raw: &str) -> Option<i64> {
    let s = raw.trim();
    if let Ok(v) = s.parse::<i64>() {
        return Some(v);
    }
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.timestamp());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t.and_utc().timestamp());
        }
    }
    None
}

pub fn format_timestamp(timestamp: i64) -> String {
    utc(timestamp).format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

pub fn ingest_csv(path: impl AsRef<Path>, schema: &ColumnSchema, holidays: &HolidayCalendar) -> Result<Dataset> {
    let file =
        std::fs::File::open(path.as_ref()).map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_csv(file, schema, holidays)
}

/// Parses a CSV stream into a dataset. Rows are sorted by timestamp;
/// duplicated timestamps are rejected.
pub fn read_csv<R: Read>(reader: R, schema: &ColumnSchema, holidays: &HolidayCalendar) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Io(e.to_string()))?.clone();
    let column =
        |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn(name.to_string()));
    let idx = [
        column(&schema.timestamp)?,
        column(&schema.ambient_temperature)?,
        column(&schema.global_radiance)?,
        column(&schema.wind_speed)?,
        column(&schema.heat_load)?,
        column(&schema.supply_temperature)?,
        column(&schema.return_temperature)?,
    ];
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::UnparsableRow { line, reason: e.to_string() }
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| row.get(idx[i]).unwrap_or("");
        let timestamp = parse_timestamp(field(0))
            .ok_or_else(|| Error::UnparsableRow { line, reason: format!("bad timestamp `{}`", field(0)) })?;
        let mut values = [0.0f64; 6];
        for (k, v) in values.iter_mut().enumerate() {
            let raw = field(k + 1);
            *v = raw.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| Error::UnparsableRow {
                line,
                reason: format!("bad value `{raw}` in column `{}`", &headers[idx[k + 1]]),
            })?;
        }
        if values[1] < 0.0 || values[2] < 0.0 {
            return Err(Error::UnparsableRow { line, reason: "radiance and wind speed must be non-negative".into() });
        }
        records.push(Record {
            calendar: derive_calendar(timestamp, holidays),
            weather: WeatherRecord {
                ambient_temperature: values[0],
                global_radiance: values[1],
                wind_speed: values[2],
            },
            substation: SubstationRecord {
                heat_load: values[3],
                supply_temperature: values[4],
                return_temperature: values[5],
            },
        });
    }
    records.sort_by_key(Record::timestamp);
    Dataset::from_records(records)
}

/// Writes the dataset with the default schema. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_csv<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let schema = ColumnSchema::default();
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record([
        &schema.timestamp,
        &schema.ambient_temperature,
        &schema.global_radiance,
        &schema.wind_speed,
        &schema.heat_load,
        &schema.supply_temperature,
        &schema.return_temperature,
    ])
    .map_err(io)?;
    for r in ds.records() {
        w.write_record([
            format_timestamp(r.timestamp()),
            r.weather.ambient_temperature.to_string(),
            r.weather.global_radiance.to_string(),
            r.weather.wind_speed.to_string(),
            r.substation.heat_load.to_string(),
            r.substation.supply_temperature.to_string(),
            r.substation.return_temperature.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let file =
        std::fs::File::create(path.as_ref()).map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    write_csv(ds, std::io::BufWriter::new(file))
}
