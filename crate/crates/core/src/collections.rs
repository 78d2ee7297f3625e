// SPDX-License-Identifier: Apache-2.0

//! The collection `G_d` of closed geodesics of discriminant `d`, its
//! subcollections, and their normalized arc-length measures.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bqf::{reduced_cycles, Discriminant};
use crate::error::{Error, Result};
use crate::observables::TestFunction;
use crate::rng;
use crate::surface::{
    flow_pair_distance, integrate_along_with, lift_geodesic, neumaier_sum, ClosedGeodesic,
    OrbitTube, SurfacePoint, TubeIndex,
};
use crate::units::{regulator, RegulatorData};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollectionKind {
    Full,
    RandomFraction,
    Tube,
    Explicit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum SubcollectionRule {
    RandomFraction {
        q: f64,
    },
    /// Members whose orbit enters `U_r(P)`, `P` the principal orbit of
    /// discriminant `orbit_d`.
    Tube {
        orbit_d: i128,
        r: f64,
    },
    Explicit {
        indices: Vec<usize>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubcollectionSpec {
    #[serde(flatten)]
    pub rule: SubcollectionRule,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct GeodesicCollection {
    pub d: Discriminant,
    pub regulator: RegulatorData,
    pub members: Vec<Arc<ClosedGeodesic>>,
    pub total_length: f64,
    pub kind: CollectionKind,
    pub spec: Option<SubcollectionSpec>,
}

/// Serializable description of a collection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollectionSummary {
    pub d: i128,
    pub kind: CollectionKind,
    pub class_indices: Vec<usize>,
    pub n_members: usize,
    pub period: f64,
    pub regulator: f64,
    pub total_length: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<SubcollectionSpec>,
}

impl GeodesicCollection {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn period(&self) -> f64 {
        self.regulator.period
    }

    pub fn class_indices(&self) -> Vec<usize> {
        self.members.iter().map(|m| m.class_index).collect()
    }

    pub fn summary(&self) -> CollectionSummary {
        CollectionSummary {
            d: self.d.value(),
            kind: self.kind,
            class_indices: self.class_indices(),
            n_members: self.len(),
            period: self.period(),
            regulator: self.regulator.regulator,
            total_length: self.total_length,
            spec: self.spec.clone(),
        }
    }

    fn with_members(
        &self,
        members: Vec<Arc<ClosedGeodesic>>,
        kind: CollectionKind,
        spec: Option<SubcollectionSpec>,
    ) -> Self {
        GeodesicCollection {
            d: self.d,
            regulator: self.regulator.clone(),
            total_length: members.len() as f64 * self.regulator.period,
            members,
            kind,
            spec,
        }
    }
}

/// One closed geodesic per rho-cycle, all of period `2 Reg(O_d)`.
pub fn build_full(d: &Discriminant) -> GeodesicCollection {
    let reg = regulator(d);
    let cycles = reduced_cycles(d);
    build_from_cycles(d, reg, &cycles)
}

pub fn build_from_cycles(
    d: &Discriminant,
    reg: RegulatorData,
    cycles: &[crate::bqf::ReductionCycle],
) -> GeodesicCollection {
    let members: Vec<Arc<ClosedGeodesic>> = cycles
        .iter()
        .enumerate()
        .map(|(i, c)| Arc::new(lift_geodesic(d, i, c, &reg)))
        .collect();
    GeodesicCollection {
        d: *d,
        total_length: members.len() as f64 * reg.period,
        regulator: reg,
        members,
        kind: CollectionKind::Full,
        spec: None,
    }
}

pub fn subcollection(
    full: &GeodesicCollection,
    spec: &SubcollectionSpec,
) -> Result<GeodesicCollection> {
    if full.kind != CollectionKind::Full {
        return Err(Error::InvalidInput(
            "subcollections are taken from full collections".into(),
        ));
    }
    match &spec.rule {
        SubcollectionRule::RandomFraction { q } => {
            if !(*q > 0.0 && *q <= 1.0) {
                return Err(Error::InvalidInput(format!("fraction {q} not in (0, 1]")));
            }
            let mut order: Vec<usize> = (0..full.len()).collect();
            let mut stream = rng::stream(
                spec.seed,
                &[rng::label("random_fraction"), full.d.value() as u64],
            );
            order.shuffle(&mut stream);
            let target = q * full.total_length;
            let mut members = Vec::new();
            let mut length = 0.0;
            for i in order {
                if !members.is_empty() && length >= target * (1.0 - 1e-12) {
                    break;
                }
                members.push(full.members[i].clone());
                length += full.period();
            }
            Ok(full.with_members(members, CollectionKind::RandomFraction, Some(spec.clone())))
        }
        SubcollectionRule::Tube { orbit_d, r } => {
            let orbit = crate::observables::principal_geodesic(*orbit_d)?;
            if !(*r > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "tube radius {r} must be positive"
                )));
            }
            let coarse = r.max(FINE_TUBE_RADIUS);
            let tube = OrbitTube::new(&orbit, coarse)?;
            let index = TubeIndex::new(&tube, coarse + tube.delta);
            let mut sub = if *r < FINE_TUBE_RADIUS {
                fine_tube_subcollection(full, &index, *r)?
            } else {
                tube_subcollection(full, &index, *r)?
            };
            sub.spec = Some(spec.clone());
            Ok(sub)
        }
        SubcollectionRule::Explicit { indices } => {
            let members = indices
                .iter()
                .map(|&i| {
                    full.members
                        .get(i)
                        .cloned()
                        .ok_or_else(|| Error::InvalidInput(format!("class index {i} out of range")))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(full.with_members(members, CollectionKind::Explicit, Some(spec.clone())))
        }
    }
}

/// Keeps every member whose orbit, sampled at step `r/4`, comes within `r`
/// of the indexed orbit. Approaches closer than `r/2` are always caught;
/// approaches in `(r/2, r)` may be missed.
pub fn tube_subcollection(
    full: &GeodesicCollection,
    index: &TubeIndex,
    r: f64,
) -> Result<GeodesicCollection> {
    members_entering(full, r / 4.0, |p| index.distance(p).value < r)
}

/// The tube rule for one orbit and radius, with its index built once.
#[derive(Clone, Debug)]
pub struct TubeDetector {
    pub r: f64,
    index: TubeIndex,
}

impl TubeDetector {
    pub fn new(orbit: &ClosedGeodesic, r: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::InvalidInput(format!(
                "tube radius {r} must be positive"
            )));
        }
        let coarse = r.max(FINE_TUBE_RADIUS);
        let tube = OrbitTube::new(orbit, coarse)?;
        let index = TubeIndex::new(&tube, coarse + tube.delta);
        Ok(TubeDetector { r, index })
    }

    pub fn select(&self, full: &GeodesicCollection) -> Result<GeodesicCollection> {
        if self.r < FINE_TUBE_RADIUS {
            fine_tube_subcollection(full, &self.index, self.r)
        } else {
            tube_subcollection(full, &self.index, self.r)
        }
    }
}

/// Below this radius the orbit is not resampled at `r/10`; candidates found
/// at this radius are refined with `flow_pair_distance`.
pub const FINE_TUBE_RADIUS: f64 = 0.01;

/// Tube rule for `r` below `FINE_TUBE_RADIUS`. `index` must be built for
/// radius `FINE_TUBE_RADIUS`; members are walked at its step and every lift
/// within the coarse cutoff is minimized over nearby flow times of both orbits.
pub fn fine_tube_subcollection(
    full: &GeodesicCollection,
    index: &TubeIndex,
    r: f64,
) -> Result<GeodesicCollection> {
    members_entering(full, FINE_TUBE_RADIUS / 4.0, |p| {
        index
            .lifts_within(p)
            .iter()
            .any(|l| flow_pair_distance(&l.displacement) < r)
    })
}

fn members_entering(
    full: &GeodesicCollection,
    step: f64,
    inside: impl Fn(&SurfacePoint) -> bool + Sync,
) -> Result<GeodesicCollection> {
    let hits: Vec<bool> = full
        .members
        .par_iter()
        .map(|m| -> Result<bool> {
            let (_, pts) = m.midpoint_samples(step)?;
            Ok(pts.iter().any(&inside))
        })
        .collect::<Result<_>>()?;
    let members: Vec<_> = full
        .members
        .iter()
        .zip(hits)
        .filter(|(_, hit)| *hit)
        .map(|(m, _)| m.clone())
        .collect();
    if members.is_empty() {
        return Err(Error::EmptySubcollection);
    }
    Ok(full.with_members(members, CollectionKind::Tube, None))
}

/// `mu_I(f)`: the equal-weight mean of the normalized line integrals.
pub fn measure(i: &GeodesicCollection, f: &TestFunction, step: f64) -> Result<f64> {
    measure_with(i, |p| f.eval(p), step)
}

pub fn measure_with(
    i: &GeodesicCollection,
    f: impl Fn(&SurfacePoint) -> f64 + Sync,
    step: f64,
) -> Result<f64> {
    if i.is_empty() {
        return Err(Error::EmptySubcollection);
    }
    debug_assert!(i.members.iter().all(|m| m.period == i.period()));
    let per_member: Vec<f64> = i
        .members
        .par_iter()
        .map(|m| integrate_along_with(m, &f, step))
        .collect::<Result<_>>()?;
    Ok(neumaier_sum(per_member) / i.len() as f64)
}

/// `phi = l(G_d) / l(I)` and `psi = phi / log d`.
pub fn ratios(i: &GeodesicCollection, full: &GeodesicCollection) -> Result<(f64, f64)> {
    if i.d != full.d {
        return Err(Error::InvalidInput("collections of different d".into()));
    }
    if i.is_empty() {
        return Err(Error::EmptySubcollection);
    }
    let phi = full.total_length / i.total_length;
    Ok((phi, phi / (full.d.value() as f64).ln()))
}
