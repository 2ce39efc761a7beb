"""Registration of built-in components under their config-file names.

Importing this module populates the five registries. Config files refer
to components by these exact strings.
"""

from __future__ import annotations

from . import features, labels, models, splitters, transforms
from .registry import FEATURES, LABELS, MODELS, SPLITTERS, TRANSFORMS

# Splitters
SPLITTERS.register("RandomTrainTestSplitter", splitters.RandomTrainTestSplitter)
SPLITTERS.register("ExplicitTrainTestSplitter", splitters.ExplicitTrainTestSplitter)
SPLITTERS.register("FixedSplitTrainTestSplitter", splitters.FixedSplitTrainTestSplitter)
SPLITTERS.register("MATRPrimaryTestTrainTestSplitter",
                   splitters.MATRPrimaryTestTrainTestSplitter)
SPLITTERS.register("MATRSecondaryTestTrainTestSplitter",
                   splitters.MATRSecondaryTestTrainTestSplitter)
SPLITTERS.register("MATRCLOTrainTestSplitter", splitters.MATRCLOTrainTestSplitter)
SPLITTERS.register("HUSTTrainTestSplitter", splitters.HUSTTrainTestSplitter)
SPLITTERS.register("SNLTrainTestSplitter", splitters.SNLTrainTestSplitter)
SPLITTERS.register("CRUHTrainTestSplitter", splitters.CRUHTrainTestSplitter)
SPLITTERS.register("CRUSHTrainTestSplitter", splitters.CRUSHTrainTestSplitter)
SPLITTERS.register("MIXTrainTestSplitter", splitters.MIXTrainTestSplitter)

# Feature extractors
FEATURES.register("VarianceModelFeatureExtractor",
                  features.VarianceModelFeatureExtractor)
FEATURES.register("DischargeModelFeatureExtractor",
                  features.DischargeModelFeatureExtractor)
FEATURES.register("FullModelFeatureExtractor", features.FullModelFeatureExtractor)
FEATURES.register("VoltageCapacityMatrixFeatureExtractor",
                  features.VoltageCapacityMatrixFeatureExtractor)
FEATURES.register("SOHCycleFeatureExtractor", features.SOHCycleFeatureExtractor)
FEATURES.register("SOCStepFeatureExtractor", features.SOCStepFeatureExtractor)
FEATURES.register("CapacityFadeSlopeFeatureExtractor",
                  features.CapacityFadeSlopeFeatureExtractor)

# Label annotators
LABELS.register("RULLabelAnnotator", labels.RULLabelAnnotator)
LABELS.register("SOHLabelAnnotator", labels.SOHLabelAnnotator)
LABELS.register("SOCLabelAnnotator", labels.SOCLabelAnnotator)


def _sequential_factory(transformations):
    """Build a Sequential transform from child config dicts (or instances)."""
    children = []
    for child in transformations:
        if isinstance(child, dict):
            params = dict(child)
            name = params.pop("name", None)
            if not isinstance(name, str):
                raise ValueError("sequential child needs a 'name' string")
            children.append(TRANSFORMS.create(name, **params))
        else:
            children.append(child)
    return transforms.SequentialDataTransformation(children)


# Data transformations
TRANSFORMS.register("ZScoreDataTransformation", transforms.ZScoreDataTransformation)
TRANSFORMS.register("ColumnwiseZScoreDataTransformation",
                    transforms.ColumnwiseZScoreDataTransformation)
TRANSFORMS.register("MinMaxDataTransformation", transforms.MinMaxDataTransformation)
TRANSFORMS.register("LogScaleDataTransformation",
                    transforms.LogScaleDataTransformation)
TRANSFORMS.register("SequentialDataTransformation", _sequential_factory)

# Models.  The linear model keeps the name used in published configs.
MODELS.register("DummyRegressor", models.DummyRegressor)
MODELS.register("LinearRegressionRULPredictor", models.LinearRegressor)
MODELS.register("RidgeRegressor", models.RidgeRegressor)
MODELS.register("PCRRegressor", models.PCRRegressor)
MODELS.register("PLSRegressor", models.PLSRegressor)
MODELS.register("DecisionTreeRegressor", models.DecisionTreeRegressor)
MODELS.register("RandomForestRegressor", models.RandomForestRegressor)
MODELS.register("MLPRegressor", models.MLPRegressor)
