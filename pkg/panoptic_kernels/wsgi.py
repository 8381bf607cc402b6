"""
wsgi for panoptic_kernels
"""

import os
from django.core.wsgi import get_wsgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'panoptic_kernels.settings')

application = get_wsgi_application()
