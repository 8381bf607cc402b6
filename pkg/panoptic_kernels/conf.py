from django.conf import settings


def kernel_setting(name):
    """
    Look up one key of the PANOPTIC_KERNELS settings dict
    """
    return settings.PANOPTIC_KERNELS[name]


def default_threads():
    return max(1, int(kernel_setting("THREADS")))
