"""smiledyn: spontaneous vs. posed smile classification.

Feature extraction from tracked facial landmarks (eyelid/lip dynamics) and
dense optical flow over eye/mouth regions, fused and classified with a
linear SVM, plus the synthetic-corpus and cross-validation tooling around
it.
"""

from .dmarker import (
    Phases,
    SmileSignal,
    derivative,
    descriptor25,
    dmarker_features,
    eyelid_signal,
    kappa,
    lip_signal,
    segment_phases,
    smooth,
)
from .evaluation import (
    ConfusionMatrix,
    CvReport,
    confusion,
    kfold,
    render_report_json,
    render_report_text,
    run_experiment,
    run_holdout,
    split,
)
from .features import FeatureConfig, extract_matrix, fuse, video_features
from .featurizers import DMarkerFeaturizer, FlowFeaturizer
from .flowfeat import (
    FlowParams,
    Roi,
    RoiSet,
    bin_regression,
    flow_histogram,
    framepair_features,
    rois_from_landmarks,
    top3_bins,
    video_flow_descriptor,
)
from .io import load_landmarks, load_manifest, save_landmarks, save_manifest
from .normalization import (
    HeadPose,
    eye_centers,
    head_pose_2d,
    head_pose_3d,
    normalize_frame,
    normalize_sequence,
)
from .optflow import FlowField, build_pyramid, compute_flow, flow_energy, warp
from .svm import (
    LinearSVM,
    TrainedModel,
    load_model,
    predict,
    save_model,
    standardize_apply,
    standardize_fit,
    train,
)
from .synth import GroundTruth, SynthParams, generate
from .types import (
    FeatureLayout,
    FeatureVector,
    LandmarkFrame,
    NormalizedFrame,
    SmiledynError,
    VideoRecord,
)

__version__ = "0.1.0"
