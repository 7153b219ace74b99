//! Applicant records and the CSV loader.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::DataError;

/// Column names of the canonical file, in file order.
pub const COLUMNS: [&str; 10] = [
    "age",
    "sex",
    "job",
    "housing",
    "saving_account",
    "checking_account",
    "credit_amount",
    "duration",
    "purpose",
    "label",
];

pub const CANONICAL_ROWS: usize = 1000;
pub const CANONICAL_DEFAULTS: usize = 300;

/// A closed categorical level set. `code()` is the position in `ALL`.
pub trait Category: Copy + Eq + Ord + fmt::Debug + 'static {
    const ALL: &'static [Self];
    fn name(self) -> &'static str;

    fn code(self) -> usize {
        Self::ALL.iter().position(|c| *c == self).expect("level listed in ALL")
    }

    fn parse(text: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|c| c.name() == text)
    }
}

macro_rules! category {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name { $($variant),+ }

        impl Category for $name {
            const ALL: &'static [Self] = &[$($name::$variant),+];
            fn name(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
    };
}

category!(Sex { Female => "female", Male => "male" });

category!(Housing { Free => "free", Own => "own", Rent => "rent" });

category!(
    /// Savings account balance band; `Unknown` stands for a missing value.
    Savings {
        Little => "little",
        Moderate => "moderate",
        QuiteRich => "quite rich",
        Rich => "rich",
        Unknown => "unknown",
    }
);

category!(
    /// Checking account balance band; `Unknown` stands for a missing value.
    Checking {
        Little => "little",
        Moderate => "moderate",
        Rich => "rich",
        Unknown => "unknown",
    }
);

category!(Purpose {
    Business => "business",
    Car => "car",
    DomesticAppliances => "domestic appliances",
    Education => "education",
    FurnitureEquipment => "furniture/equipment",
    RadioTv => "radio/TV",
    Repairs => "repairs",
    VacationOthers => "vacation/others",
});

category!(Outcome { Repaid => "repaid", Default => "default" });

/// Job skill level, 0 (unskilled non-resident) to 3 (highly skilled).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Job(u8);

impl Job {
    pub const LEVELS: u8 = 4;

    pub fn new(level: u8) -> Option<Self> {
        (level < Self::LEVELS).then_some(Self(level))
    }

    pub fn level(self) -> u8 {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ApplicantRecord {
    pub age: u32,
    pub sex: Sex,
    pub job: Job,
    pub housing: Housing,
    pub saving_account: Savings,
    pub checking_account: Checking,
    pub credit_amount: u32,
    pub duration: u32,
    pub purpose: Purpose,
    pub label: Outcome,
}

impl ApplicantRecord {
    /// Little funds in both accounts.
    pub fn has_little_funds(&self) -> bool {
        self.saving_account == Savings::Little && self.checking_account == Checking::Little
    }
}

/// Renames source columns to canonical names.
///
/// Text format: one `canonical_name = source_column` pair per line; blank
/// lines and lines starting with `#` are ignored. Unmapped canonical columns
/// are looked up under their own name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SchemaMapping {
    renames: HashMap<String, String>,
}

impl SchemaMapping {
    pub fn parse(text: &str) -> Result<Self, DataError> {
        let mut renames = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mapping_err = |message: &str| DataError::Mapping { line: i + 1, message: message.to_string() };
            let (key, value) = line.split_once('=').ok_or_else(|| mapping_err("expected `name = column`"))?;
            let (key, value) = (key.trim(), value.trim());
            if !COLUMNS.contains(&key) {
                return Err(mapping_err(&format!("unknown canonical column `{key}`")));
            }
            if value.is_empty() {
                return Err(mapping_err("empty source column"));
            }
            if renames.insert(key.to_string(), value.to_string()).is_some() {
                return Err(mapping_err(&format!("`{key}` mapped twice")));
            }
        }
        Ok(Self { renames })
    }

    pub fn load(path: &Path) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path).map_err(|source| DataError::io(path, source))?;
        Self::parse(&text)
    }

    pub fn source_column<'a>(&'a self, canonical: &'a str) -> &'a str {
        self.renames.get(canonical).map(String::as_str).unwrap_or(canonical)
    }
}

/// Reads every record of a CSV file. Rows in errors are 1-based file line
/// numbers, so the header is line 1 and the first record line 2.
pub fn load_records(path: &Path, mapping: &SchemaMapping) -> Result<Vec<ApplicantRecord>, DataError> {
    let file = std::fs::File::open(path).map_err(|source| DataError::io(path, source))?;
    read_records(file, mapping)
}

pub fn read_records<R: std::io::Read>(input: R, mapping: &SchemaMapping) -> Result<Vec<ApplicantRecord>, DataError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers().map_err(|e| csv_error(1, e))?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(DataError::Empty);
    }
    let mut position = [0usize; COLUMNS.len()];
    for (k, name) in COLUMNS.iter().enumerate() {
        let source = mapping.source_column(name);
        position[k] = headers
            .iter()
            .position(|h| h == source)
            .ok_or_else(|| DataError::MissingColumn { column: source.to_string() })?;
    }
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| csv_error(line, e))?;
        let field = |k: usize| row.get(position[k]).unwrap_or("");
        let schema = |k: usize, message: String| DataError::Schema { row: line, column: COLUMNS[k].to_string(), message };
        let positive = |k: usize| -> Result<u32, DataError> {
            let text = field(k);
            match text.parse::<u32>() {
                Ok(v) if v > 0 => Ok(v),
                Ok(_) => Err(schema(k, "must be positive".into())),
                Err(_) => Err(schema(k, format!("`{text}` is not a positive integer"))),
            }
        };
        fn level<C: Category>(text: &str) -> Result<C, String> {
            C::parse(text).ok_or_else(|| format!("`{text}` is not one of {:?}", C::ALL.iter().map(|c| c.name()).collect::<Vec<_>>()))
        }
        // other renderings of the dataset leave missing balances as NA
        let account = |k: usize| -> &str {
            match field(k) {
                "NA" | "" => "unknown",
                text => text,
            }
        };
        let job_text = field(2);
        let job = job_text
            .parse::<u8>()
            .ok()
            .and_then(Job::new)
            .ok_or_else(|| schema(2, format!("`{job_text}` is not a job level 0-3")))?;
        out.push(ApplicantRecord {
            age: positive(0)?,
            sex: level(field(1)).map_err(|m| schema(1, m))?,
            job,
            housing: level(field(3)).map_err(|m| schema(3, m))?,
            saving_account: level(account(4)).map_err(|m| schema(4, m))?,
            checking_account: level(account(5)).map_err(|m| schema(5, m))?,
            credit_amount: positive(6)?,
            duration: positive(7)?,
            purpose: level(field(8)).map_err(|m| schema(8, m))?,
            label: level(field(9)).map_err(|m| schema(9, m))?,
        });
    }
    if out.is_empty() {
        return Err(DataError::Empty);
    }
    Ok(out)
}

fn csv_error(line: usize, e: csv::Error) -> DataError {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(line);
    DataError::Schema { row: line, column: String::new(), message: e.to_string() }
}

/// Loads the canonical dataset and checks its size and label balance.
pub fn load_dataset(path: &Path, mapping: &SchemaMapping) -> Result<Vec<ApplicantRecord>, DataError> {
    let records = load_records(path, mapping)?;
    verify_canonical(&records)?;
    Ok(records)
}

pub fn verify_canonical(records: &[ApplicantRecord]) -> Result<(), DataError> {
    if records.len() != CANONICAL_ROWS {
        return Err(DataError::InvalidInput(format!(
            "expected {CANONICAL_ROWS} records, found {}",
            records.len()
        )));
    }
    let defaults = records.iter().filter(|r| r.label == Outcome::Default).count();
    if defaults != CANONICAL_DEFAULTS {
        return Err(DataError::InvalidInput(format!(
            "expected {CANONICAL_DEFAULTS} default labels, found {defaults}"
        )));
    }
    Ok(())
}
