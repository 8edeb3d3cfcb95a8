from latlab.reductions.bdd import BddRun, desk_trials, exact_bdd_oracle, paper_trials, svp_to_bdd
from latlab.reductions.dgs import (DgsOracleSpec, DgsReductionRun, biased_dgs_oracle, exact_dgs_oracle,
                                   svp_to_dgs_ma, svp_to_dgs_np)
from latlab.reductions.gmss import NEITHER, NO, YES, Cvp1Instance, doubled_basis, gmss_reduce, gmss_scale, svp_label
from latlab.reductions.sis import (Calibration, CalibrationError, ChainSource, PhaseLimitError, SampleSource,
                                   SisCapError, SisInstance, StepResult, calibrate_r, chain_length, dgs_chain,
                                   dgs_to_sis_full, dgs_to_sis_step, sis_coefficients, sis_oracle_bruteforce,
                                   size_reduce, to_basis)
