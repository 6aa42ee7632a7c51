__version__ = "0.1.0"

# Import library modules
from .errors import *
from .config import *
from .repkit import *
from .channels import *
from .embed import *
from .monotones import *
from .abelian import *
from .progress import *

# not importing from .harness because it is the command-line entry point;
# use covasym.harness.main or the `covasym` console script
