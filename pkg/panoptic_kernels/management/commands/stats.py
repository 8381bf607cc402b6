import csv
from dataclasses import asdict

from ...ops.io_formats import read_panoptic_png
from ...ops.panoptic_upsample import misalignment_stats
from ..base import KernelCommand, positive_int

STATS_FIELDS = ["stage", "pct_misaligned", "pct_new", "n_misaligned", "n_new", "n_total"]


class Command(KernelCommand):
    help = "Per-stage share of features that nearest upsampling maps to the wrong instance"

    def add_arguments(self, parser):
        parser.add_argument("--panoptic", required=True, help="RGB panoptic PNG")
        parser.add_argument("--stages", type=positive_int, default=3)
        parser.add_argument("--base-scale", type=positive_int, default=None,
                            help="factor between the map and the coarsest stage (default 2**stages)")
        parser.add_argument("--format", choices=("csv", "table"), default="csv")

    def handle(self, *args, **options):
        panoptic = read_panoptic_png(options["panoptic"])
        rows = misalignment_stats(panoptic, options["stages"], options["base_scale"])
        if options["format"] == "csv":
            writer = csv.DictWriter(self.stdout, fieldnames=STATS_FIELDS, lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow(asdict(row))
            return
        self.stdout.write(self.style.MIGRATE_HEADING(
            f"{'stage':>5}  {'misaligned %':>12}  {'new %':>8}  {'misaligned':>10}  "
            f"{'new':>8}  {'pixels':>10}"))
        for row in rows:
            self.stdout.write(
                f"{row.stage:>5}  {row.pct_misaligned:>12.4f}  {row.pct_new:>8.4f}  "
                f"{row.n_misaligned:>10}  {row.n_new:>8}  {row.n_total:>10}")
