import logging
import statistics

from ...conf import kernel_setting
from ...ops.bench import (FAMILIES, KERNELS, bench_fixture, bench_kernel, format_size,
                          run_suite, verify_outputs, write_report)
from ...ops.panoptic_conv import panoptic_conv_forward
from ...ops.tensor_core import DTYPES, checksum, resolve_dtype
from ..base import KernelCommand, non_negative_int, positive_int, size_type

logger = logging.getLogger(__name__)


class Command(KernelCommand):
    help = "Time one masked kernel, or with --suite every kernel over every id-map family"

    def add_arguments(self, parser):
        defaults = kernel_setting("BENCH")
        parser.add_argument("--kernel", choices=KERNELS, default="conv-opt")
        parser.add_argument("--size", type=size_type(4), action="append", default=None,
                            help="NxCxHxW, repeatable with --suite (default 1x16x128x128)")
        parser.add_argument("--iters", type=positive_int, default=defaults["ITERS"])
        parser.add_argument("--warmup", type=non_negative_int, default=defaults["WARMUP"])
        parser.add_argument("--family", choices=FAMILIES, default="random-instances")
        parser.add_argument("--seed", type=non_negative_int, default=0)
        parser.add_argument("--dtype", choices=sorted(DTYPES), default=kernel_setting("DTYPE"))
        parser.add_argument("--suite", action="store_true",
                            help="run all kernels and families and write the CSV report")
        parser.add_argument("--report", default=None, help="CSV report path (default stdout)")
        self.add_threads_argument(parser)

    def handle(self, *args, **options):
        sizes = options["size"] or [(1, 16, 128, 128)]
        threads = self.threads(options)
        row_block = kernel_setting("ROW_BLOCK")
        rtol = kernel_setting("BENCH")["CHECKSUM_RTOL"]
        if options["suite"]:
            rows = run_suite(sizes, iters=options["iters"], threads=threads, row_block=row_block,
                             warmup=options["warmup"], rtol=rtol, seed=options["seed"])
            if options["report"]:
                with open(options["report"], "w", newline="") as handle:
                    write_report(rows, handle)
                self.stdout.write(self.style.SUCCESS(f"wrote {len(rows)} rows to {options['report']}"))
            else:
                write_report(rows, self.stdout)
            return
        if len(sizes) > 1:
            self.usage("--size may only be repeated with --suite")

        shape = sizes[0]
        kernel = options["kernel"]
        x, p, params = bench_fixture(shape, options["family"], options["seed"],
                                     resolve_dtype(options["dtype"]))
        times, sums, output = bench_kernel(kernel, x, p, params, options["iters"], threads,
                                           row_block, options["warmup"])
        median = statistics.median(times)
        windows = shape[0] * shape[2] * shape[3]
        self.stdout.write(f"{kernel} {format_size(shape)} {options['family']} "
                          f"threads={threads} iters={options['iters']}")
        self.stdout.write(f"median {median:.6f}s  min {min(times):.6f}s  "
                          f"{windows / median:.1f} windows/s")
        self.stdout.write(f"checksum {sums[-1]:.17g}")
        if kernel == "conv-opt":
            reference = panoptic_conv_forward(x, p, params)
            error = verify_outputs(output, reference, rtol)
            self.stdout.write(f"reference checksum {checksum(reference):.17g} "
                              f"(relative difference {error:.3e})")
        logger.info("bench %s %s median %.6fs", kernel, format_size(shape), median)
