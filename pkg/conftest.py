import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'panoptic_kernels.settings')
django.setup()
