import json
import logging
import time

from ...exceptions import DimensionError
from ...ops.generator import generator_forward
from ...ops.io_formats import read_panoptic_png, read_semantic_png, write_image_png
from ...ops.tensor_core import DTYPES
from ...serializers import build_generator_config, config_hash, config_mapping, read_config_file
from ..base import KernelCommand, non_negative_int

logger = logging.getLogger(__name__)

MANIFEST_SUFFIX = ".manifest.json"


class Command(KernelCommand):
    help = ("Synthesize an image from a semantic and a panoptic PNG with the toy "
            "generator, and write a run manifest next to it")

    def add_arguments(self, parser):
        parser.add_argument("--semantic", required=True, help="8-bit grayscale class-index PNG")
        parser.add_argument("--panoptic", required=True, help="RGB panoptic PNG")
        parser.add_argument("--config", default=None, help="YAML generator configuration")
        parser.add_argument("--seed", type=non_negative_int, default=None,
                            help="weight seed (default: the configuration's, else 0)")
        parser.add_argument("--dtype", choices=sorted(DTYPES), default=None)
        parser.add_argument("--out", required=True, help="output RGB PNG")
        self.add_threads_argument(parser)

    def handle(self, *args, **options):
        data = read_config_file(options["config"]) if options["config"] else {}
        data.update({key: options[key] for key in ("seed", "dtype") if options[key] is not None})

        panoptic = read_panoptic_png(options["panoptic"])
        stages = build_generator_config(data).num_stages
        scale = 2 ** stages
        height, width = panoptic.shape
        if height % scale or width % scale:
            raise DimensionError(
                f"panoptic map {height}x{width} from {options['panoptic']} is not divisible "
                f"by 2**{stages} = {scale}")
        data.setdefault("base_height", height // scale)
        data.setdefault("base_width", width // scale)
        config = build_generator_config(data)

        semantic = read_semantic_png(options["semantic"], config.num_classes)
        if semantic.shape != panoptic.shape:
            raise DimensionError(
                f"semantic map {options['semantic']} is {semantic.shape}, "
                f"panoptic map {options['panoptic']} is {panoptic.shape}")

        threads = self.threads(options)
        start = time.perf_counter()
        image = generator_forward(semantic, panoptic, config, threads=threads)
        elapsed = time.perf_counter() - start
        write_image_png(image, options["out"])

        manifest = {
            "seed": config.seed,
            "config": config_mapping(config),
            "config_hash": config_hash(config),
            "semantic": options["semantic"],
            "panoptic": options["panoptic"],
            "output": options["out"],
            "shape": list(image.shape),
            "elapsed_seconds": elapsed,
            "threads": threads,
        }
        with open(options["out"] + MANIFEST_SUFFIX, "w") as handle:
            json.dump(manifest, handle, indent=2, sort_keys=True)
        logger.info("forward pass %s took %.3fs", image.shape, elapsed)
        self.stdout.write(self.style.SUCCESS(
            f"wrote {options['out']} ({height}x{width}, seed {config.seed}, {elapsed:.3f}s)"))
