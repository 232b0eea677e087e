"""svydiff: county-level survey differences, their uncertainty, and maps.

Turns unit-record survey microdata with replicate weights plus a census-style
baseline into per-area difference estimates, one-sided p-values and two-sided
significance classes, global-null diagnostics (tabulations, QQ series, sign
tests), and choropleth SVGs that encode the estimate in hue and its
significance in saturation.
"""

from .errors import ConfigError, IngestError, MismatchError, RenderError, SvydiffError, SynthError
from .estimation import (
    AreaEstimate,
    Variable,
    estimate_all,
    estimate_area,
    flag_degenerate,
    national_estimate,
    sdr_standard_error,
    weighted_pph,
    weighted_vacancy_rate,
)
from .inference import (
    DifferenceResult,
    NationalTestResult,
    PValueTabulation,
    SigClass,
    SignTestResult,
    compare,
    compare_all,
    count_significant,
    national_test,
    one_sided_p,
    qq_series,
    sign_test,
    significance_table,
    std_normal_cdf,
    tabulate_pvalues,
    tabulation_from_counts,
    two_sided_class,
)
from .ingest import (
    AreaGeometry,
    BaselineRecord,
    MicrodataTable,
    Occupancy,
    UnitRecord,
    read_baseline,
    read_geometry,
    read_microdata,
    write_microdata,
)
from .synth import SynthConfig, generate, read_truth
from .viz import (
    AlbersParams,
    BBox,
    HueClass,
    MapMode,
    MapSpec,
    classify_hue,
    fill_color,
    project_albers,
    render_map,
    render_qq,
)

__version__ = "0.1.0"
