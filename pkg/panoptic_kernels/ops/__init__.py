from .tensor_core import (PAD_ID, boundary_map, make_panoptic_id, nearest_downsample,
                          nearest_upsample, nearest_upsample_transpose, one_hot,
                          split_panoptic_id)
from .panoptic_conv import (ConvGrads, ConvParams, panoptic_conv_backward, panoptic_conv_forward,
                            panoptic_conv_forward_optimized, standard_conv_backward,
                            standard_conv_forward, window_mask)
from .panoptic_upsample import (AlignResult, HoleFillParams, StageStats, align_routing,
                                align_upsample, align_upsample_backward, hole_fill,
                                misalignment_stats, panoptic_upsample, panoptic_upsample_backward)
from .generator import (GeneratorConfig, generator_forward, init_generator_params,
                        resblock_forward, shared_encoder_features, spade_denorm)
