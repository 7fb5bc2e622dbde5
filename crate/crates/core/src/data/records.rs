//! Raw measurement and stay records, and their CSV interface.
//!
//! ```text
//! events.csv  stay_id,feature_id,time_offset_hours,value
//! stays.csv   stay_id,age,care_unit,stay_hours,first_icu_stay,in_hospital_mortality
//! ```
//!
//! Lines starting with `#` are comments. Flags are written as `0`/`1`;
//! `true`/`false` are accepted on input.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::NUM_FEATURES;

pub const EVENTS_HEADER: [&str; 4] = ["stay_id", "feature_id", "time_offset_hours", "value"];
pub const STAYS_HEADER: [&str; 6] = [
    "stay_id",
    "age",
    "care_unit",
    "stay_hours",
    "first_icu_stay",
    "in_hospital_mortality",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CareUnit {
    MICU,
    CCU,
    CSRU,
    SICU,
    TSICU,
}

impl CareUnit {
    pub const ALL: [CareUnit; 5] = [
        CareUnit::MICU,
        CareUnit::CCU,
        CareUnit::CSRU,
        CareUnit::SICU,
        CareUnit::TSICU,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CareUnit::MICU => "MICU",
            CareUnit::CCU => "CCU",
            CareUnit::CSRU => "CSRU",
            CareUnit::SICU => "SICU",
            CareUnit::TSICU => "TSICU",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for CareUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CareUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CareUnit::ALL
            .into_iter()
            .find(|u| u.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown care unit {s:?} (expected MICU, CCU, CSRU, SICU or TSICU)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawEvent {
    pub stay_id: u64,
    pub feature_id: usize,
    /// Hours since ICU admission.
    pub time_offset: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StayMeta {
    pub stay_id: u64,
    pub age: f64,
    pub care_unit: CareUnit,
    pub stay_hours: f64,
    pub first_icu_stay: bool,
    pub in_hospital_mortality: bool,
}

impl StayMeta {
    /// Rows of the hourly grid: the stay length rounded up, at least one.
    pub fn true_hours(&self) -> usize {
        (self.stay_hours.ceil() as usize).max(1)
    }
}

struct Columns<'a> {
    path: &'a Path,
    index: Vec<usize>,
}

impl<'a> Columns<'a> {
    fn new(headers: &csv::StringRecord, wanted: &[&str], path: &'a Path) -> Result<Self> {
        let mut index = Vec::with_capacity(wanted.len());
        let mut missing = Vec::new();
        for name in wanted {
            match headers.iter().position(|h| h == *name) {
                Some(i) => index.push(i),
                None => missing.push(*name),
            }
        }
        if !missing.is_empty() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: headers.position().map_or(1, |p| p.line()),
                msg: format!("missing columns: {}", missing.join(", ")),
            });
        }
        Ok(Self { path, index })
    }

    fn err(&self, record: &csv::StringRecord, msg: String) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line: record.position().map_or(0, |p| p.line()),
            msg,
        }
    }

    fn field<'r>(&self, record: &'r csv::StringRecord, col: usize, name: &str) -> Result<&'r str> {
        record
            .get(self.index[col])
            .ok_or_else(|| self.err(record, format!("missing value for {name}")))
    }

    fn parse<T: FromStr>(&self, record: &csv::StringRecord, col: usize, name: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        let raw = self.field(record, col, name)?;
        raw.parse::<T>()
            .map_err(|e| self.err(record, format!("{name} {raw:?}: {e}")))
    }

    fn flag(&self, record: &csv::StringRecord, col: usize, name: &str) -> Result<bool> {
        match self.field(record, col, name)?.to_ascii_lowercase().as_str() {
            "1" | "true" => Ok(true),
            "0" | "false" => Ok(false),
            other => Err(self.err(record, format!("{name} {other:?} is not a flag"))),
        }
    }
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: e.to_string(),
    }
}

/// Streams parsed events to `sink`, so large files need not be held twice.
pub fn read_events_with(
    input: impl Read,
    path: &Path,
    mut sink: impl FnMut(RawEvent),
) -> Result<()> {
    let mut rdr = reader(input);
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let cols = Columns::new(&headers, &EVENTS_HEADER, path)?;
    let mut record = csv::StringRecord::new();
    while rdr
        .read_record(&mut record)
        .map_err(|e| csv_error(path, e))?
    {
        let stay_id = cols.parse::<u64>(&record, 0, "stay_id")?;
        let feature_id = cols.parse::<usize>(&record, 1, "feature_id")?;
        if feature_id >= NUM_FEATURES {
            return Err(cols.err(
                &record,
                format!("feature_id {feature_id} out of range 0..{NUM_FEATURES}"),
            ));
        }
        let time_offset = cols.parse::<f64>(&record, 2, "time_offset_hours")?;
        if !(time_offset >= 0.0 && time_offset.is_finite()) {
            return Err(cols.err(
                &record,
                format!("time_offset_hours {time_offset} must be finite and >= 0"),
            ));
        }
        let value = cols.parse::<f64>(&record, 3, "value")?;
        if !value.is_finite() {
            return Err(cols.err(&record, format!("value {value} is not finite")));
        }
        sink(RawEvent {
            stay_id,
            feature_id,
            time_offset,
            value,
        });
    }
    Ok(())
}

pub fn read_events(input: impl Read, path: &Path) -> Result<Vec<RawEvent>> {
    let mut out = Vec::new();
    read_events_with(input, path, |e| out.push(e))?;
    Ok(out)
}

pub fn read_stays(input: impl Read, path: &Path) -> Result<Vec<StayMeta>> {
    let mut rdr = reader(input);
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let cols = Columns::new(&headers, &STAYS_HEADER, path)?;
    let mut out = Vec::new();
    let mut record = csv::StringRecord::new();
    while rdr
        .read_record(&mut record)
        .map_err(|e| csv_error(path, e))?
    {
        let stay_id = cols.parse::<u64>(&record, 0, "stay_id")?;
        let age = cols.parse::<f64>(&record, 1, "age")?;
        if !age.is_finite() {
            return Err(cols.err(&record, format!("age {age} is not finite")));
        }
        let care_unit = cols.parse::<CareUnit>(&record, 2, "care_unit")?;
        let stay_hours = cols.parse::<f64>(&record, 3, "stay_hours")?;
        if !(stay_hours > 0.0 && stay_hours.is_finite()) {
            return Err(cols.err(&record, format!("stay_hours {stay_hours} must be positive")));
        }
        out.push(StayMeta {
            stay_id,
            age,
            care_unit,
            stay_hours,
            first_icu_stay: cols.flag(&record, 4, "first_icu_stay")?,
            in_hospital_mortality: cols.flag(&record, 5, "in_hospital_mortality")?,
        });
    }
    Ok(out)
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::io(path, e))
}

/// Reads an events file and a stays file.
pub fn load_events(
    events_path: &Path,
    stays_path: &Path,
) -> Result<(Vec<RawEvent>, Vec<StayMeta>)> {
    let events = read_events(open(events_path)?, events_path)?;
    let stays = read_stays(open(stays_path)?, stays_path)?;
    Ok((events, stays))
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

pub fn write_events_header(out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{}", EVENTS_HEADER.join(","))
}

pub fn write_event_row(out: &mut impl Write, e: &RawEvent) -> std::io::Result<()> {
    writeln!(
        out,
        "{},{},{},{}",
        e.stay_id, e.feature_id, e.time_offset, e.value
    )
}

pub fn write_events(out: &mut impl Write, events: &[RawEvent]) -> std::io::Result<()> {
    write_events_header(out)?;
    events.iter().try_for_each(|e| write_event_row(out, e))
}

pub fn write_stays(out: &mut impl Write, stays: &[StayMeta]) -> std::io::Result<()> {
    writeln!(out, "{}", STAYS_HEADER.join(","))?;
    for s in stays {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            s.stay_id,
            s.age,
            s.care_unit,
            s.stay_hours,
            flag(s.first_icu_stay),
            flag(s.in_hospital_mortality)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("events.csv")
    }

    #[test]
    fn empty_events_file_is_empty() {
        assert!(read_events(
            "stay_id,feature_id,time_offset_hours,value\n".as_bytes(),
            p()
        )
        .unwrap()
        .is_empty());
    }

    #[test]
    fn feature_id_30_names_the_line() {
        let text = "stay_id,feature_id,time_offset_hours,value\n1,0,0.5,80\n1,30,1.0,3\n";
        match read_events(text.as_bytes(), p()) {
            Err(Error::Parse { line, msg, .. }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("feature_id"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_rows() {
        let head = "stay_id,feature_id,time_offset_hours,value\n";
        for row in ["1,2,abc,3", "1,2,-0.5,3", "x,2,1,3", "1,2,1,NaN", "1,2,1"] {
            let text = format!("{head}{row}\n");
            assert!(
                matches!(
                    read_events(text.as_bytes(), p()),
                    Err(Error::Parse { line: 2, .. })
                ),
                "{row}"
            );
        }
        assert!(matches!(
            read_events("stay_id,feature_id,value\n".as_bytes(), p()),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn unknown_care_unit_is_a_parse_error() {
        let text = "stay_id,age,care_unit,stay_hours,first_icu_stay,in_hospital_mortality\n7,50,NICU,20,1,0\n";
        match read_stays(text.as_bytes(), Path::new("stays.csv")) {
            Err(Error::Parse { line, msg, .. }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("NICU"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn columns_may_be_reordered_and_commented() {
        let text = "# exported\nvalue,stay_id,time_offset_hours,feature_id\n80.5,3,1.25,4\n";
        let ev = read_events(text.as_bytes(), p()).unwrap();
        assert_eq!(
            ev,
            vec![RawEvent {
                stay_id: 3,
                feature_id: 4,
                time_offset: 1.25,
                value: 80.5
            }]
        );
    }

    #[test]
    fn write_read_round_trip() {
        let stays = vec![
            StayMeta {
                stay_id: 1,
                age: 63.5,
                care_unit: CareUnit::TSICU,
                stay_hours: 12.0,
                first_icu_stay: true,
                in_hospital_mortality: false,
            },
            StayMeta {
                stay_id: 2,
                age: 16.0,
                care_unit: CareUnit::CCU,
                stay_hours: 1999.99,
                first_icu_stay: false,
                in_hospital_mortality: true,
            },
        ];
        let events = vec![
            RawEvent {
                stay_id: 1,
                feature_id: 29,
                time_offset: 0.1 + 0.2,
                value: -1e-7,
            },
            RawEvent {
                stay_id: 2,
                feature_id: 0,
                time_offset: 0.0,
                value: 123456.789,
            },
        ];
        let mut buf = Vec::new();
        write_stays(&mut buf, &stays).unwrap();
        assert_eq!(read_stays(buf.as_slice(), p()).unwrap(), stays);
        let mut buf = Vec::new();
        write_events(&mut buf, &events).unwrap();
        assert_eq!(read_events(buf.as_slice(), p()).unwrap(), events);
    }

    #[test]
    fn true_hours_rounds_up() {
        let mut s = StayMeta {
            stay_id: 1,
            age: 40.0,
            care_unit: CareUnit::MICU,
            stay_hours: 12.0,
            first_icu_stay: true,
            in_hospital_mortality: false,
        };
        assert_eq!(s.true_hours(), 12);
        s.stay_hours = 12.01;
        assert_eq!(s.true_hours(), 13);
        s.stay_hours = 0.2;
        assert_eq!(s.true_hours(), 1);
    }

    #[test]
    fn care_unit_parsing() {
        for u in CareUnit::ALL {
            assert_eq!(u.as_str().parse::<CareUnit>().unwrap(), u);
        }
        assert_eq!("micu".parse::<CareUnit>().unwrap(), CareUnit::MICU);
        assert!("ICU".parse::<CareUnit>().is_err());
    }
}
