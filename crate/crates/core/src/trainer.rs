//! Cluster-sampled training of the shared GCN.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gcn::{self, AdamState, GcnDims, GcnModel};
use crate::partition::SubGraph;
use crate::superpixel::Role;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainParams {
    pub epochs: usize,
    /// Optimizer steps per epoch per sub-graph (steps = this · c).
    pub steps_per_cluster: usize,
    pub learning_rate: f64,
    pub conv_dim: usize,
    pub hidden_units: usize,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            epochs: 400,
            steps_per_cluster: 5,
            learning_rate: 0.005,
            conv_dim: 128,
            hidden_units: 64,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    pub train_acc: Option<f64>,
    pub val_oa: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Loss of every optimizer step, in order.
    pub step_losses: Vec<f64>,
    /// Index into `epochs` of the selected checkpoint.
    pub best_epoch: usize,
    /// Sub-graph drawn at each step.
    pub sampled: Vec<usize>,
}

/// Seed of the sub-graph sampling stream; the model is initialised from the
/// run seed itself.
pub fn sampling_seed(seed: u64) -> u64 {
    seed ^ 0x5DEE_CE66_D1CE_5EED
}

/// Accuracy of `model` on the nodes carrying a `role` label across all
/// sub-graphs; `None` when there are no such nodes.
pub fn evaluate_epoch(model: &GcnModel, subgraphs: &[SubGraph], role: Role) -> Result<Option<f64>> {
    let mut hit = 0;
    let mut total = 0;
    for sg in subgraphs {
        let labels = sg.labels.role(role);
        if labels.iter().all(|&l| l == 0) {
            continue;
        }
        let cache = gcn::forward(model, &sg.normalized, &sg.features)?;
        if let Some((h, t)) = gcn::accuracy(&cache.predictions(), labels) {
            hit += h;
            total += t;
        }
    }
    Ok((total > 0).then(|| hit as f64 / total as f64))
}

/// Selected checkpoint, the optimizer state at that point, and the history.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: GcnModel,
    pub optimizer: AdamState,
    pub history: TrainHistory,
}

/// Trains one model shared by all sub-graphs and returns the checkpoint with
/// the best validation accuracy (earliest on ties).
///
/// Each epoch runs `steps_per_cluster · c` steps; each step draws a sub-graph
/// uniformly, redrawing (without consuming the step) while it has no train
/// label. When no node carries a validation label the last epoch is kept.
pub fn train(subgraphs: &[SubGraph], params: &TrainParams) -> Result<(GcnModel, TrainHistory)> {
    train_full(subgraphs, params).map(|o| (o.model, o.history))
}

pub fn train_full(subgraphs: &[SubGraph], params: &TrainParams) -> Result<TrainOutcome> {
    let Some(first) = subgraphs.first() else {
        return Err(Error::NoLabels("no sub-graphs".into()));
    };
    if !subgraphs.iter().any(SubGraph::has_train_labels) {
        return Err(Error::NoLabels("no sub-graph holds a train-labeled node".into()));
    }
    if params.epochs == 0 || params.steps_per_cluster == 0 {
        return Err(Error::InvalidParameter("epochs and steps must be positive".into()));
    }
    let dims = GcnDims {
        features: first.features.cols(),
        conv: params.conv_dim,
        hidden: params.hidden_units,
        classes: first.labels.num_classes,
    };
    let mut model = gcn::init_model(dims, params.seed)?;
    let mut adam = AdamState::new(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(sampling_seed(params.seed));
    let steps = params.steps_per_cluster * subgraphs.len();

    let mut history = TrainHistory {
        epochs: Vec::with_capacity(params.epochs),
        step_losses: Vec::with_capacity(params.epochs * steps),
        best_epoch: 0,
        sampled: Vec::with_capacity(params.epochs * steps),
    };
    let mut best: Option<(f64, GcnModel, AdamState)> = None;

    for epoch in 0..params.epochs {
        let mut loss_sum = 0.0;
        for _ in 0..steps {
            let idx = loop {
                let i = rng.gen_range(0..subgraphs.len());
                if subgraphs[i].has_train_labels() {
                    break i;
                }
            };
            let sg = &subgraphs[idx];
            let cache = gcn::forward(&model, &sg.normalized, &sg.features)?;
            let l = gcn::loss(&cache, &sg.labels.train)?;
            let grads = gcn::backward(&cache, &model, &sg.normalized, &sg.features, &sg.labels.train);
            gcn::adam_step(&mut model, &grads, &mut adam, params.learning_rate);
            loss_sum += l;
            history.step_losses.push(l);
            history.sampled.push(idx);
        }
        let train_acc = evaluate_epoch(&model, subgraphs, Role::Train)?;
        let val_oa = evaluate_epoch(&model, subgraphs, Role::Val)?;
        history.epochs.push(EpochRecord {
            epoch,
            mean_loss: loss_sum / steps as f64,
            train_acc,
            val_oa,
        });
        if let Some(v) = val_oa {
            if best.as_ref().is_none_or(|(b, _, _)| v > *b) {
                best = Some((v, model.clone(), adam.clone()));
                history.best_epoch = epoch;
            }
        }
    }

    let (model, optimizer) = match best {
        Some((_, m, a)) => (m, a),
        None => {
            history.best_epoch = params.epochs - 1;
            (model, adam)
        }
    };
    Ok(TrainOutcome {
        model,
        optimizer,
        history,
    })
}

/// Class predictions (1-based) for every node of the full graph.
pub fn predict_nodes(model: &GcnModel, subgraphs: &[SubGraph], node_count: usize) -> Result<Vec<u16>> {
    let mut out = vec![0u16; node_count];
    for sg in subgraphs {
        let cache = gcn::forward(model, &sg.normalized, &sg.features)?;
        for (local, p) in cache.predictions().into_iter().enumerate() {
            out[sg.nodes[local]] = p;
        }
    }
    Ok(out)
}
