"""riskmine: dynamic network risk assessment combining Bayesian attack graphs
with process-mining analysis of packet-level traffic."""

from .bag import (Bag, Cpt, ExploitEdge, SecurityCondition, load_bag,
                  load_bag_file, load_builtin_bag, rebuild_cpt, set_edge_evidence)
from .conformance import (Alignment, AlignmentDistribution, Diagnosis, diagnose,
                          distribution, fitness, optimal_alignment)
from .discovery import ProcessModel, discover, shortest_accepting_path
from .eventlog import EventLog, NetworkEvent, Trace, merge_logs, read_log, write_log
from .inference import assess_risk, posterior_enumerate, posterior_ve
from .monitor import (NodeProfile, RiskReport, characterize, monitor_step,
                      run_assessment)
from .similarity import SimilarityScore, cosine_similarity, evidence_from_traffic
from .simulate import (ScenarioSpec, builtin_scenario, emission_manifest,
                       generate_exploit_captures, generate_traffic)
from .traffic import (FlowWindow, PacketRecord, StateModel, assign_state,
                      extract_event_logs, extract_features, fit_states,
                      flag_label, ingest_packets)

__version__ = "0.1.0"
