from segiqr.attribution.features import (
    FeatureRecord,
    IqrVector,
    extract_features,
    extract_features_multi,
    read_feature_csv,
    read_provenance_sidecar,
    write_feature_csv,
    write_provenance_sidecar,
)
from segiqr.attribution.loo import AttributionMatrix, loo_attributions, occlude
from segiqr.attribution.stats import column_iqr, empirical_quantile, iqr
from segiqr.attribution.taps import MODES, TapSet, select_taps

__all__ = [
    "AttributionMatrix",
    "FeatureRecord",
    "IqrVector",
    "MODES",
    "TapSet",
    "column_iqr",
    "empirical_quantile",
    "extract_features",
    "extract_features_multi",
    "iqr",
    "loo_attributions",
    "occlude",
    "read_feature_csv",
    "read_provenance_sidecar",
    "select_taps",
    "write_feature_csv",
    "write_provenance_sidecar",
]
