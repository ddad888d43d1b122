//! Nearest-AMAV grouping of BMAVs (point location in the Voronoi diagram
//! whose sites are the AMAV positions).

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::Belief;
use crate::geometry::Vec2;

/// Which BMAVs each AMAV serves during one grouping epoch.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroupAssignment {
    /// Indexed by AMAV; each set holds BMAV indices.
    pub groups: Vec<BTreeSet<usize>>,
    /// AMAVs whose Voronoi region held no BMAV and were given the whole swarm.
    pub fallback: Vec<bool>,
    pub epoch_start: f64,
}

impl GroupAssignment {
    pub fn group(&self, amav: usize) -> &BTreeSet<usize> {
        &self.groups[amav]
    }

    /// AMAV owning `bmav` by nearest-site rule (ignores fallback sets).
    pub fn owner_of(&self, bmav: usize) -> Option<usize> {
        self.groups
            .iter()
            .zip(&self.fallback)
            .position(|(g, &fb)| !fb && g.contains(&bmav))
    }
}

/// Assigns every BMAV to the AMAV nearest to its belief mean.
///
/// Ties go to the lowest AMAV index. An AMAV whose region is empty is given
/// every BMAV; the other groups are left as they are.
pub fn assign_groups(amav_positions: &[Vec2], bmav_beliefs: &[Belief], epoch_start: f64) -> Result<GroupAssignment> {
    if amav_positions.is_empty() {
        return Err(Error::InvalidArgument("grouping needs at least one AMAV".into()));
    }
    if bmav_beliefs.is_empty() {
        return Err(Error::InvalidArgument("grouping needs at least one BMAV".into()));
    }
    let mut groups = vec![BTreeSet::new(); amav_positions.len()];
    for (i, b) in bmav_beliefs.iter().enumerate() {
        groups[nearest_site(amav_positions, b.mean)].insert(i);
    }
    let fallback: Vec<bool> = groups.iter().map(BTreeSet::is_empty).collect();
    for (g, &fb) in groups.iter_mut().zip(&fallback) {
        if fb {
            g.extend(0..bmav_beliefs.len());
        }
    }
    Ok(GroupAssignment { groups, fallback, epoch_start })
}

/// Index of the site closest to `q`; strict comparison keeps the lowest index on ties.
pub fn nearest_site(sites: &[Vec2], q: Vec2) -> usize {
    let mut best = 0;
    let mut best_d2 = f64::INFINITY;
    for (j, s) in sites.iter().enumerate() {
        let d = q - *s;
        let d2 = d.dot(d);
        if d2 < best_d2 {
            best = j;
            best_d2 = d2;
        }
    }
    best
}
