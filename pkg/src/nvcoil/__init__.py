"""Field, homogeneity and ensemble-signal toolkit for small microwave coils driving NV-centre ensembles."""
from nvcoil.fieldcore import (
    DomainError,
    DriveSpec,
    FieldSample,
    LoopTurn,
    SingularityError,
    elliptic_ke,
    loop_field,
    phase_lag,
    rf_constants,
    source_current,
    superpose,
)
from nvcoil.fitting import FitResult, OdmrFit, delta_zeta, fit_decaying_cosine, fit_gaussian_dip, waveform_error_stats
from nvcoil.geometry import BarrelParams, CoilGeometry, GeometryError, build_catalog, parse_geometry_config
from nvcoil.homogeneity import HomogeneityProfile, IcdSpec, homogeneity_profile, icd_samples, sigma_pp, table_report
from nvcoil.optimizer import Parameter, SearchResult, SearchSpace, Template, calibrate_barrel, refine, sweep
from nvcoil.spinsim import (
    NvConstants,
    RabiModel,
    baseline_correct,
    rabi_closed_form,
    rabi_from_field_map,
    rabi_lorentzian_numeric,
    resonance_to_bias,
)

__version__ = "0.1.0"
