from ._qsurf import (
    Atom,
    Grid,
    Measure,
    PhaseSolution,
    QsurfError,
    ScalarField,
    Shell,
    SolveOptions,
    __version__,
    energy_split_check,
    extract_contour,
    minimize_multi_phase,
    minimize_one_phase,
    minimize_two_phase,
    one_phase_energy,
    qi_residual,
    reference,
    run,
    sakai_check,
    sakai_threshold,
    two_phase_energy,
)

__all__ = [name for name in dir() if not name.startswith("_")]
