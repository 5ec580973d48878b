"""Random-matrix diagnostics for neural-network weight spectra.

The package fits Marchenko-Pastur bulks and heavy power-law tails to the
eigenvalue spectrum of a weight matrix, derives capacity metrics, and
classifies each layer into one of six spectral phases.  Synthetic
generators with known ground truth back every fitter, and a CLI wraps
analysis, generation, and the validation suites.
"""

__version__ = "0.1.0"

from .errors import (ArrayDataError, ArrayFormatError, ArrayShapeError,
                     DegenerateBulkError, DegenerateDataError,
                     InsufficientDataError, ManifestError, NumericError,
                     SpectradError, UnclassifiableError, UndefinedMetricError)
from .tensor_io import (ManifestEntry, WeightMatrix, load_array,
                        load_manifest, read_manifest_entries, save_array)
from .esd import ESD, compute_esd, empirical_cdf, histogram, pool_esds
from .mp import (DEFAULT_EDGE_FLOOR, MPFit, edge_tolerance, fit_mp, ks_distance,
                 mp_cdf, mp_density, mp_edges, mp_median)
from .heavytail import (ALPHA_RELIABLE_RANGE, ALTERNATIVE_MODELS,
                        AlternativeFit, PlFit, classify_universality,
                        compare_alternatives, fit_power_law,
                        fit_power_law_samples, frechet_scaling_exponent)
from .metrics import (LayerMetrics, LocalizationSummary, ipr, layer_metrics,
                      localization_summary, mp_soft_rank, spectral_entropy,
                      stable_rank)
from .phases import (PHASES, PhaseDecision, PhaseEvidence, PhaseThresholds,
                     SpikeStatistics, classify, classify_esd, gather_evidence,
                     spike_statistics, zero_mass_fraction)
from .synth import (KINDS, SpikeSpec, SynthSpec, bpp_threshold_strength,
                    generate, spike_coefficient, spike_position)
from .rng import DeterministicStream
from .report import (AnalysisOptions, LayerError, PhaseReport, analyze_file,
                     analyze_manifest, analyze_matrix, report_from_dict,
                     report_to_dict, results_to_json, write_report)

__all__ = [name for name in dir() if not name.startswith("_")]
