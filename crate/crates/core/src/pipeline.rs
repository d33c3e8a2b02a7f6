//! The end-to-end stages, each a pure function of its upstream artifacts.
//!
//! `run` chains the same stage functions the staged command line calls, so
//! both routes produce identical outputs.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::cube::{HsiCube, LabelMap};
use crate::error::Result;
use crate::gcn::{standardize_columns, GcnModel};
use crate::graph::{build_graph, SuperpixelGraph};
use crate::math;
use crate::metrics::{self, ConfusionMatrix, MetricsReport};
use crate::partition::{self, induce_subgraphs, PartitionAssignment, PartitionParams, SubGraph};
use crate::pca::{self, PcaModel};
use crate::split::{split_samples, DatasetSplit, SplitParams};
use crate::superpixel::{self, aggregate_labels, compute_attributes, NodeLabels, SlicParams, SuperpixelMap};
use crate::trainer::{self, TrainOutcome, TrainParams};

pub fn stage_pca(cube: &HsiCube, cfg: &RunConfig) -> Result<PcaModel> {
    cfg.validate()?;
    pca::fit_pca(cube, cfg.pca_dim)
}

pub fn reduce(cube: &HsiCube, model: &PcaModel) -> Result<HsiCube> {
    pca::transform(cube, model)
}

/// Superpixels of the reduced cube. `compactness` is scaled by the square
/// root of the retained variance, making it unit-free.
pub fn stage_segment(reduced: &HsiCube, model: &PcaModel, cfg: &RunConfig) -> Result<SuperpixelMap> {
    let spread = math::sqrt(model.explained_variance.iter().sum::<f64>());
    superpixel::segment(
        reduced,
        &SlicParams {
            target: cfg.superpixel_target(reduced.pixel_count()),
            compactness: cfg.compactness * spread,
            iters: cfg.slic_iters,
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphArtifact {
    /// Node features are the standardised superpixel means.
    pub graph: SuperpixelGraph,
    pub split: DatasetSplit,
    pub node_labels: NodeLabels,
}

/// Builds the graph from raw superpixel means, then standardises the node
/// features fed to the network. Also draws the sample split.
pub fn stage_graph(
    reduced: &HsiCube,
    map: &SuperpixelMap,
    labels: &LabelMap,
    cfg: &RunConfig,
) -> Result<GraphArtifact> {
    labels.check_matches(reduced)?;
    let attrs = compute_attributes(map, reduced)?;
    let mut graph = build_graph(map, attrs, cfg.o, cfg.k)?;
    graph.features = standardize_columns(&graph.features);
    let split = split_samples(
        labels,
        &SplitParams {
            per_class: cfg.per_class,
            per_class_small: cfg.per_class_small,
            val_fraction: cfg.val_fraction,
            seed: cfg.seed,
        },
    )?;
    let node_labels = aggregate_labels(map, &split, labels);
    Ok(GraphArtifact {
        graph,
        split,
        node_labels,
    })
}

pub fn stage_partition(artifact: &GraphArtifact, cfg: &RunConfig) -> Result<(PartitionAssignment, Vec<SubGraph>)> {
    let assign = partition::partition(
        &artifact.graph,
        &PartitionParams {
            c: cfg.c,
            eps: cfg.eps,
            seed: cfg.seed,
        },
    )?;
    let subgraphs = induce_subgraphs(&artifact.graph, &assign, &artifact.node_labels)?;
    Ok((assign, subgraphs))
}

pub fn train_params(cfg: &RunConfig) -> TrainParams {
    TrainParams {
        epochs: cfg.epochs,
        steps_per_cluster: 5,
        learning_rate: cfg.learning_rate,
        conv_dim: cfg.conv_dim,
        hidden_units: cfg.hidden_units,
        seed: cfg.seed,
    }
}

pub fn stage_train(subgraphs: &[SubGraph], cfg: &RunConfig) -> Result<TrainOutcome> {
    trainer::train_full(subgraphs, &train_params(cfg))
}

pub fn stage_predict(model: &GcnModel, subgraphs: &[SubGraph], map: &SuperpixelMap) -> Result<Vec<u16>> {
    let nodes = trainer::predict_nodes(model, subgraphs, map.count())?;
    metrics::predict_pixels(&nodes, map)
}

pub fn stage_eval(pred: &[u16], labels: &LabelMap, split: &DatasetSplit) -> Result<(ConfusionMatrix, MetricsReport)> {
    let m = metrics::confusion(pred, labels, &split.test)?;
    let r = metrics::metrics(&m)?;
    Ok((m, r))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub pca: PcaModel,
    pub segmentation: SuperpixelMap,
    pub graph: GraphArtifact,
    pub partition: PartitionAssignment,
    pub subgraphs: Vec<SubGraph>,
    pub training: TrainOutcome,
    pub prediction: Vec<u16>,
    pub confusion: ConfusionMatrix,
    pub report: MetricsReport,
}

pub fn run(cube: &HsiCube, labels: &LabelMap, cfg: &RunConfig) -> Result<RunOutput> {
    labels.check_matches(cube)?;
    let pca = stage_pca(cube, cfg)?;
    let reduced = reduce(cube, &pca)?;
    let segmentation = stage_segment(&reduced, &pca, cfg)?;
    let graph = stage_graph(&reduced, &segmentation, labels, cfg)?;
    let (partition, subgraphs) = stage_partition(&graph, cfg)?;
    let training = stage_train(&subgraphs, cfg)?;
    let prediction = stage_predict(&training.model, &subgraphs, &segmentation)?;
    let (confusion, report) = stage_eval(&prediction, labels, &graph.split)?;
    Ok(RunOutput {
        pca,
        segmentation,
        graph,
        partition,
        subgraphs,
        training,
        prediction,
        confusion,
        report,
    })
}
