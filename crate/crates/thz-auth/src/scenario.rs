//! Node deployments, ground-truth fingerprints and the slot-occupancy
//! process that decides who transmits in each time slot.
//!
//! The receiver ("Bob") sits at the origin of a square map of side
//! `map_side_m`. Legitimate transmitters ("Alice" nodes) and impersonators
//! ("Eve" nodes) are placed i.i.d. uniformly over the square, rejecting
//! positions closer than `d_min_m` to Bob so the path loss stays finite.
//! Each Alice's path loss to Bob is her fingerprint; the authenticator
//! learns the Alice fingerprints in a training phase, while Eve losses
//! exist only inside the simulator.
//!
//! Slot occupancy: each slot is owned by an Alice drawn from the prior
//! vector. With probability `alpha` the owner stays idle and a uniformly
//! chosen Eve transmits in her place; otherwise the owner transmits. The
//! marginal transmit probability of Alice i is therefore
//! (1 - alpha) * prior(i), and the Eve fraction is alpha whenever any Eve
//! exists. This generative model keeps all slot probabilities normalized.

use serde::{Deserialize, Serialize};

use crate::channel::{path_loss_db, AbsorptionModel, Medium};
use crate::error::{Error, Result};
use crate::numerics::RandomSource;

/// Node positions for one realization. Bob is fixed at the origin.
#[derive(Debug, Clone)]
pub struct Deployment {
    pub alice: Vec<[f64; 2]>,
    pub eve: Vec<[f64; 2]>,
    pub map_side_m: f64,
    pub d_min_m: f64,
}

impl Deployment {
    pub fn alice_distances_m(&self) -> Vec<f64> {
        self.alice
            .iter()
            .map(|p| (p[0].powi(2) + p[1].powi(2)).sqrt())
            .collect()
    }

    pub fn eve_distances_m(&self) -> Vec<f64> {
        self.eve
            .iter()
            .map(|p| (p[0].powi(2) + p[1].powi(2)).sqrt())
            .collect()
    }
}

/// Draw a deployment: `alice_count` + `eve_count` positions i.i.d. uniform
/// over [0, side]^2, rejection-resampled until every node is at least
/// `d_min_m` from Bob at the origin.
pub fn deploy(
    alice_count: usize,
    eve_count: usize,
    map_side_m: f64,
    d_min_m: f64,
    rng: &mut RandomSource,
) -> Result<Deployment> {
    if alice_count == 0 {
        return Err(Error::InvalidParameter(
            "deployment requires at least one Alice node".into(),
        ));
    }
    if !(d_min_m > 0.0 && d_min_m < map_side_m) {
        return Err(Error::InvalidParameter(format!(
            "deployment requires 0 < d_min < map side, got d_min = {d_min_m}, side = {map_side_m}"
        )));
    }
    let draw = |rng: &mut RandomSource| loop {
        let p = [rng.uniform(0.0, map_side_m), rng.uniform(0.0, map_side_m)];
        if (p[0].powi(2) + p[1].powi(2)).sqrt() >= d_min_m {
            return p;
        }
    };
    let alice = (0..alice_count).map(|_| draw(rng)).collect();
    let eve = (0..eve_count).map(|_| draw(rng)).collect();
    Ok(Deployment {
        alice,
        eve,
        map_side_m,
        d_min_m,
    })
}

/// Path-loss fingerprints of a deployment at one carrier frequency.
///
/// `alice_db` are the fingerprints the authenticator knows; `eve_db` are
/// the impersonators' losses, visible only to the simulator. The bounds
/// are the losses at the closest admissible distance (`d_min`) and at the
/// far corner of the map (sqrt(2) * side).
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub alice_db: Vec<f64>,
    pub eve_db: Vec<f64>,
    pub l_min_db: f64,
    pub l_max_db: f64,
}

pub fn ground_truth(
    deployment: &Deployment,
    model: &AbsorptionModel,
    medium: &Medium,
    frequency_hz: f64,
) -> Result<GroundTruth> {
    let loss = |d: f64| path_loss_db(model, medium, frequency_hz, d);
    let alice_db = deployment
        .alice_distances_m()
        .into_iter()
        .map(loss)
        .collect::<Result<Vec<_>>>()?;
    let eve_db = deployment
        .eve_distances_m()
        .into_iter()
        .map(loss)
        .collect::<Result<Vec<_>>>()?;
    Ok(GroundTruth {
        alice_db,
        eve_db,
        l_min_db: loss(deployment.d_min_m)?,
        l_max_db: loss(std::f64::consts::SQRT_2 * deployment.map_side_m)?,
    })
}

/// Who occupies a slot and with what probability an owner idles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OccupancyModel {
    priors: Vec<f64>,
    alpha: f64,
    eve_count: usize,
}

impl OccupancyModel {
    /// `priors` is the slot-ownership distribution over Alice nodes;
    /// `alpha` is the idle fraction in (0, 1).
    pub fn new(priors: Vec<f64>, alpha: f64, eve_count: usize) -> Result<Self> {
        if priors.is_empty() {
            return Err(Error::InvalidParameter("occupancy priors are empty".into()));
        }
        if priors.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidParameter(
                "occupancy priors must be non-negative and finite".into(),
            ));
        }
        let total: f64 = priors.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "occupancy priors must sum to 1, got {total}"
            )));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "idle fraction must lie in (0, 1), got {alpha}"
            )));
        }
        Ok(Self {
            priors,
            alpha,
            eve_count,
        })
    }

    /// Uniform priors 1/M over `alice_count` nodes.
    pub fn uniform(alice_count: usize, alpha: f64, eve_count: usize) -> Result<Self> {
        if alice_count == 0 {
            return Err(Error::InvalidParameter(
                "occupancy model requires at least one Alice node".into(),
            ));
        }
        Self::new(
            vec![1.0 / alice_count as f64; alice_count],
            alpha,
            eve_count,
        )
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eve_count(&self) -> usize {
        self.eve_count
    }
}

/// True transmitter of one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotTruth {
    Alice(usize),
    Eve(usize),
}

/// Draw the true transmitter of one slot: owner from the priors, then an
/// idle flip; an idle slot is taken by a uniformly chosen Eve. With no
/// Eve nodes the owner always transmits.
pub fn sample_slot(occupancy: &OccupancyModel, rng: &mut RandomSource) -> SlotTruth {
    let owner = rng.categorical(&occupancy.priors);
    if occupancy.eve_count > 0 && rng.bernoulli(occupancy.alpha) {
        SlotTruth::Eve(rng.index(occupancy.eve_count))
    } else {
        SlotTruth::Alice(owner)
    }
}
