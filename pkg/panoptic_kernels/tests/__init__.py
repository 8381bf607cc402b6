from .tensor_core_test import *
from .panoptic_conv_test import *
from .panoptic_upsample_test import *
from .generator_test import *
from .io_formats_test import *
from .serializers_test import *
from .gradcheck_test import *
from .bench_test import *
from .cli_test import *
from .api_test import *
