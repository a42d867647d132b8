"""Weather image classification pipeline with superpixel boundary mask
augmentation: segmentation, masking, feature extraction, per-category linear
SVM training, and mean average precision evaluation."""

from .imgcore import Image, LabImage, load_image, rgb_to_lab, save_image
from .superpixel import Segmentation, SlicParams, boundary_map, slic_segment
from .maskaug import OverlaySpec, apply_mask, augment
from .features import (
    FeatureSet,
    FeatureVector,
    extract_color_histogram,
    extract_gradient_histogram,
    l2_normalize,
    read_feature_file,
    write_feature_file,
)
from .svm import LinearModel, TrainConfig, objective, score, train
from .evalkit import (
    ExtractorSpec,
    PartitionedDataset,
    RankedItem,
    ResultsTable,
    average_precision,
    mean_average_precision,
    run_experiment,
)
from .datasetman import (
    CATEGORIES,
    CategoryPartition,
    ImageRecord,
    load_manifest,
    partition,
    partition_all,
)

__version__ = "0.1.0"
