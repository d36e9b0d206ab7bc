"""saliqa: saliency-aware image quality evaluation."""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    DataError,
    DegenerateMapError,
    FormatError,
    GraphError,
    ParameterError,
    SaliqaError,
    SchemaError,
    ValidationError,
)
from .explanation import aggregate_maps, gradcam_combine, svd_first_component  # noqa: E402
from .image_core import (  # noqa: E402
    RasterImage,
    gaussian_blur,
    load_image,
    resize_bilinear,
    save_image,
    to_grayscale,
)
from .masking import MaskingSpec, PerturbationCurve, aopc, masking_series  # noqa: E402
from .quality import QualityScore, SsimParams, ew_psnr, ew_ssim, ms_ssim, mse, psnr, ssim  # noqa: E402
from .saliency import (  # noqa: E402
    FixationSet,
    HistogramMatcher,
    SaliencyMap,
    cc,
    center_prior,
    kld,
    map_transform,
    normalize,
    nss,
    sim,
)
from .stats import ScoredGroup, fraccp, plcc, srocc  # noqa: E402
from .subjective import BradleyTerry, VoteRecord, bradley_terry, filter_sessions  # noqa: E402
