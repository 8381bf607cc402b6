from django.apps import AppConfig


class PanopticKernelsConfig(AppConfig):
    name = 'panoptic_kernels'
    verbose_name = "Panoptic-aware kernels"
