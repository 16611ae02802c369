"""Simulator for qubit quantum heat engines: Otto and Carnot cycles with
work, heat and entropy-production ledgers, plus exact two-point-measurement
work statistics for the Jarzynski equality."""

__version__ = "0.1.0"

from .accounting import (  # noqa: E402
    StrokeRecord,
    entropy_production,
    first_law_check,
    integrate_heat,
    integrate_work,
    stroke_record,
)
from .core import (  # noqa: E402
    DensityOperator,
    QubitHamiltonian,
    gibbs_state,
    mean_energy,
    partition_function,
    relative_entropy,
    von_neumann_entropy,
)
from .cycles import (  # noqa: E402
    CarnotSpec,
    CycleReport,
    OttoSpec,
    SweepGrid,
    carnot_efficiency,
    otto_carnot_deficit,
    otto_efficiency,
    run_carnot,
    run_otto,
    sweep,
)
from .dynamics import (  # noqa: E402
    BathSpec,
    DriveSchedule,
    Trajectory,
    propagator,
    quasistatic_isotherm,
    thermalize,
    unitary_propagate,
)
from .errors import DomainError, IntegratorError, InvariantViolation  # noqa: E402
from .fluctuations import (  # noqa: E402
    TpmProtocol,
    WorkDistribution,
    driven_protocol,
    free_energy_difference,
    jarzynski_average,
    jarzynski_check,
    sudden_quench,
    tpm_distribution,
)
