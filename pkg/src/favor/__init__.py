"""Full-reference perceptual quality assessment for compressed face videos."""

from .backend import (
    BackendConfig,
    FeaturePyramid,
    analytic_backend,
    extract_features,
    load_backend,
)
from .baselines import SsimParams, msssim_frame, psnr_frame, ssim_frame
from .evaluate import (
    EvalRecord,
    FitParams,
    evaluate,
    fit_logistic,
    krcc,
    logistic,
    plcc,
    rmse,
    srcc,
)
from .ingest import FrameSequence, InputTensor, load_video, preprocess
from .mos import MosResult, RatingsMatrix, compute_mos, mos, rescale, zscore
from .pipeline import ScoreRecord, score_pair
from .pooling import (
    FrameScoreSeries,
    MemoryParams,
    gaussian_rank_weights,
    memory_refine,
    pool,
    video_quality,
)
from .quality import (
    ChannelStats,
    SimilarityWeights,
    channel_covariance,
    channel_stats,
    frame_quality,
    structure_similarity,
    texture_similarity,
)

__version__ = "0.1.0"
