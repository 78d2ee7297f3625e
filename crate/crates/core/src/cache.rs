// SPDX-License-Identifier: Apache-2.0

//! On-disk cache of the arithmetic data of one discriminant: a JSON file per
//! `d`, named by `d` in decimal.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bqf::{class_group, enumerate_reduced, Discriminant, QuadForm, ReductionCycle};
use crate::collections::{build_from_cycles, GeodesicCollection};
use crate::error::Result;
use crate::units::{regulator, PellSolution, RegulatorData};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub schema_version: u32,
    pub d: i128,
    pub forms: Vec<QuadForm>,
    pub cycles: Vec<Vec<QuadForm>>,
    pub table: Vec<Vec<usize>>,
    pub pell: PellSolution,
    pub regulator: f64,
    pub period: f64,
    pub has_norm_minus_one_unit: bool,
}

impl CacheEntry {
    pub fn compute(d: &Discriminant) -> Self {
        let group = class_group(d);
        let reg = regulator(d);
        CacheEntry {
            schema_version: SCHEMA_VERSION,
            d: d.value(),
            forms: enumerate_reduced(d),
            cycles: group.cycles.into_iter().map(|c| c.forms).collect(),
            table: group.table,
            pell: reg.pell,
            regulator: reg.regulator,
            period: reg.period,
            has_norm_minus_one_unit: reg.has_norm_minus_one_unit,
        }
    }

    pub fn class_number(&self) -> usize {
        self.cycles.len()
    }

    pub fn regulator_data(&self) -> RegulatorData {
        RegulatorData {
            pell: self.pell.clone(),
            regulator: self.regulator,
            period: self.period,
            has_norm_minus_one_unit: self.has_norm_minus_one_unit,
        }
    }

    pub fn reduction_cycles(&self) -> Vec<ReductionCycle> {
        self.cycles
            .iter()
            .map(|forms| ReductionCycle {
                forms: forms.clone(),
            })
            .collect()
    }

    pub fn collection(&self) -> Result<GeodesicCollection> {
        let d = Discriminant::new(self.d)?;
        Ok(build_from_cycles(
            &d,
            self.regulator_data(),
            &self.reduction_cycles(),
        ))
    }
}

/// Read-through cache; without a directory every lookup is computed afresh.
#[derive(Clone, Debug, Default)]
pub struct Cache {
    dir: Option<PathBuf>,
}

impl Cache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Cache { dir }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn path(&self, d: i128) -> Option<PathBuf> {
        self.dir.as_ref().map(|dir| dir.join(d.to_string()))
    }

    /// The cached entry, if present, readable and of the current schema.
    pub fn load(&self, d: i128) -> Option<CacheEntry> {
        let text = fs::read_to_string(self.path(d)?).ok()?;
        let entry: CacheEntry = serde_json::from_str(&text).ok()?;
        (entry.schema_version == SCHEMA_VERSION && entry.d == d).then_some(entry)
    }

    /// Writes through a temporary file and a rename, so readers never see a
    /// partial file.
    pub fn store(&self, entry: &CacheEntry) -> Result<()> {
        let (Some(dir), Some(path)) = (self.dir.as_ref(), self.path(entry.d)) else {
            return Ok(());
        };
        fs::create_dir_all(dir)?;
        let tmp = dir.join(format!(".{}.{}.tmp", entry.d, std::process::id()));
        {
            let mut file = fs::File::create(&tmp)?;
            file.write_all(serde_json::to_string(entry)?.as_bytes())?;
            file.sync_all()?;
        }
        fs::rename(&tmp, &path)?;
        Ok(())
    }

    pub fn entry(&self, d: i128) -> Result<CacheEntry> {
        let disc = Discriminant::new(d)?;
        if let Some(e) = self.load(d) {
            return Ok(e);
        }
        let e = CacheEntry::compute(&disc);
        self.store(&e)?;
        Ok(e)
    }

    pub fn collection(&self, d: i128) -> Result<GeodesicCollection> {
        self.entry(d)?.collection()
    }
}
