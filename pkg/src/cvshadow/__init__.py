"""cvshadow: classical shadow tomography for continuous-variable states."""

__version__ = "0.1.0"

from .phase_space import (
    CharGrid,
    Rotation2,
    bessel_i0,
    char_coherent_dyad,
    char_fock_dyad,
    char_gaussian_raw,
    displacement_oracle,
    hermite_wavefunction,
    laguerre,
    omega_apply,
    omega_matrix,
    symplectic_product,
)
from .states import (
    CatStateSpec,
    ChainSpec,
    FockMatrix,
    GaussianStateSpec,
    cat_char,
    cat_position_pdf,
    chain_ground_state,
    char_gaussian,
    fock_matrix_of,
)
from .measurement import (
    SampleBatch,
    ShadowRecord,
    heterodyne_pdf,
    homodyne_pdf,
    sample_heterodyne,
    sample_heterodyne_batch,
    sample_homodyne,
    sample_homodyne_batch,
    stream_rng,
)
from .shadows import (
    QuadratureRule,
    ShadowAverage,
    ShadowMatrix,
    WindowSpec,
    build_heterodyne_shadow,
    build_homodyne_shadow,
    default_window,
    empirical_average,
    heterodyne_shadow_entry,
    homodyne_shadow_entry,
    project_PM,
    project_PM_tilde,
    shadow_char_eval,
    windowed_dyad_char,
)
from .bounds import (
    BoundReport,
    MomentProfile,
    bernstein_tail,
    delta0,
    required_samples_heterodyne,
    required_samples_homodyne,
    sigma_heterodyne,
    sigma_homodyne,
    sobolev_norm,
    truncation_error_bound,
)
from .entropy import (
    EntropyPlan,
    entropy_coefficients,
    entropy_poly,
    entropy_reference,
    plan_entropy,
)
from .qmc import BoxDomain, HaltonStream, halton_point, qmc_integrate, tv_estimate
