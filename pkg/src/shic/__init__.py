"""Greyscale image compression with isotropic and anisotropic Shepard
inpainting: four codecs on regular and subdivision-tree masks, a homogeneous
diffusion baseline, and a rate-distortion evaluation harness."""

from .image import (DiskSpec, MaskedData, PgmError, load_pgm, make_disk,
                    make_regular_mask, mse, read_pgm, sample_values, save_pgm,
                    ssim, write_pgm)
from .shepard_iso import (AccumulationMaps, IsoKernel, accumulate,
                          compute_sigma, gaussian_weight, inpaint_iso,
                          make_kernel)
from .shepard_aniso import (GradientField, LocalSigmaField, OrientedKernel,
                            compute_gradients, diffusivity, inpaint_aniso,
                            inpaint_iso_local, kernel_from_gradient,
                            oriented_weight, voronoi_sigmas)
from .tonal import (TonalState, dequantize, make_tonal_state, quantize,
                    tonal_closed_form_iso, tonal_error_iso, tonal_optimize_iso,
                    tonal_optimize_trial)
from .entropy import (AdaptiveBitModel, FrequencyTable, bit_decode,
                      bit_encode, build_table, range_decode, range_encode)
from .homdiff import SolverConfig, hom_trial_tonal, inpaint_hom
from .rjip import (EncodeResult, RjipParams, rjip_a_encode_fixed, rjip_decode,
                   rjip_encode_fixed, search_params)
from .subdivision import (TreeParams, deserialize_tree, leaf_corners,
                          search_split_error, select_q, serialize_tree,
                          subdivide_decode, subdivide_encode)
from .evaluate import (RdPoint, decode_any, disk_experiment, rd_sweep,
                       scaling_study, write_csv)
from .container import ContainerError

__version__ = "0.1.0"
