//! Siamese metric learning: shared trunk, pair objectives, centroid
//! classification and the jointly trained emotion head.

pub mod checkpoint;
mod classify;
mod loss;
mod model;
mod train;

pub use classify::{compute_centers, mel_classify, ClassCenters, EmbeddedCenters};
pub use loss::{
    argmax_emotion, classification_loss, joint_loss, mel_loss, mels_predict, snn_loss,
    verification_loss, verification_prob, Labelled, LossGrads, SamplePair,
};
pub use model::{
    embed, pair_distance, DistanceKind, SiameseConfig, SiameseGrads, SiameseModel, SnnObjective,
    DEFAULT_MARGIN, EMBEDDING_DIM, HEAD_HIDDEN, TRUNK_WIDTHS,
};
pub use train::{
    train_mel, train_mel_with, train_mels, train_mels_with, IndexPair, PairStream,
    SiameseOptimizer, TrainConfig, TrainLog,
};
