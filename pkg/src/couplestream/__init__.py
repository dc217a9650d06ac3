"""Coupled kernel SVMs for correlated, drifting data streams.

Train all per-window sub-classifiers of several related data streams in
one convex problem: adjacent windows of one stream are tied together
(internal coupling) and the streams are tied to each other within each
window (external coupling). Includes synthetic drift benchmarks, real
dataset loaders, an experiment harness, a CLI, and an HTTP service.
"""

from .datatypes import (HyperParams, KernelSpec, MultiTaskStream, Sample, combine_tasks,
                        read_stream_csv, stream_from_csv_text, stream_to_csv_text,
                        write_stream_csv)
from .errors import ConvergenceError, CoupleStreamError, InputError, NumericError
from .kernels import augmented_kernel, kernel_cross, kernel_eval, kernel_matrix
from .coupling import (CouplingStructure, build_assignment, build_coupling,
                       build_external_adjacency, build_internal_adjacency, build_M,
                       invert_spd, window_of)
from .qp import QpSolution, kkt_gap, solve_simplex_qp
from .svm import (Prediction, TrainedModel, assemble_Q, classifier_distance, decision,
                  decision_batch, fit, load_model, merge_streams, model_from_doc,
                  model_to_doc, predict, save_model)
from .generators import (Ds1Spec, HyperplaneSpec, StreamRecipe, gen_ds1,
                         gen_rotating_hyperplane, halve_stream, inject_label_noise,
                         named_recipe)
from .loaders import load_air_quality, load_gsadd, load_water_quality
from .harness import (ExperimentReport, Grid, LambdaSweepReport, MethodModel,
                      PrequentialReport, eval_windowed, fit_method, grid_search,
                      run_prequential, run_prequential_sweep, run_synthetic_protocol,
                      sweep_optimal_lambda, sweep_synthetic)

__version__ = "0.1.0"
