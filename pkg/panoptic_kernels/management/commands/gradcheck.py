from ...conf import kernel_setting
from ...exceptions import CheckFailure
from ...ops.gradcheck import OPS, run_check
from ..base import KernelCommand, non_negative_int, size_type

DEFAULT_SIZES = {"conv": (5, 5), "upsample": (4, 6)}


class Command(KernelCommand):
    help = ("Compare an analytic backward pass against central finite differences; "
            "exits 3 when the max relative error reaches the tolerance")

    def add_arguments(self, parser):
        defaults = kernel_setting("GRADCHECK")
        parser.add_argument("--op", choices=OPS, required=True)
        parser.add_argument("--seed", type=non_negative_int, default=0)
        parser.add_argument("--size", type=size_type(2), default=None, help="HxW")
        parser.add_argument("--constant", action="store_true",
                            help="upsample only: use a single-id map (pure copy)")
        parser.add_argument("--step", type=float, default=defaults["STEP"])
        parser.add_argument("--tolerance", type=float, default=defaults["TOLERANCE"])
        parser.add_argument("--inject-bug", action="store_true",
                            help="debug: corrupt one analytic gradient entry")

    def handle(self, *args, **options):
        op = options["op"]
        if options["constant"] and op != "upsample":
            self.usage("--constant only applies to --op upsample")
        report = run_check(op, options["seed"], options["size"] or DEFAULT_SIZES[op],
                           step=options["step"], tolerance=options["tolerance"],
                           inject_bug=options["inject_bug"], constant=options["constant"])
        height, width = report.size
        self.stdout.write(f"{op} {height}x{width} seed {report.seed}: "
                          f"max relative error {report.max_rel_error:.3e}")
        if not report.passed:
            raise CheckFailure(f"{op} gradient check failed: {report.max_rel_error:.3e} "
                               f">= tolerance {report.tolerance:.0e}")
        self.stdout.write(self.style.SUCCESS("passed"))
