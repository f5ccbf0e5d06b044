from .build import Simulation, build
from .runner import (ExperimentResult, MissingCampaignData, detached_switch_trace, emit_figures,
                     run_experiment, run_with_obfuscation, write_outputs)
from .schema import (ParseError, Scenario, ValidationError, bundled_scenarios, dump_scenario, load_scenario,
                     parse_scenario)

__all__ = [
    "ExperimentResult", "MissingCampaignData", "ParseError", "Scenario", "Simulation", "ValidationError",
    "build", "bundled_scenarios", "detached_switch_trace", "dump_scenario", "emit_figures", "load_scenario",
    "parse_scenario", "run_experiment", "run_with_obfuscation", "write_outputs",
]
