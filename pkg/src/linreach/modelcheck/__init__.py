"""Verification of finite-state program models against violation automata."""
from .model import (DATA_VALUES, Edge, Instr, Local, ModelError, ProgramModel, Var, load_model,
                    run_edge, validate_model)
from .petri import (BasisSizeExceeded, CoverabilityTarget, CoverResult, InvariantBroken, PetriNet,
                    Transition, coverable, is_antichain, to_petri_net, witness_steps)
from .reach import (Counterexample, ReplayFailed, StateSpaceExceeded, Step, product_reach, replay,
                    steps_to_execution)
from .verify import (EXIT_CODES, INCONCLUSIVE, LINEARIZABLE, VIOLATION, ModelVerdict,
                     complete_pending, verify)
