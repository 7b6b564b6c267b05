__version__ = "0.1"

from green_complexity import src
from green_complexity import models
from green_complexity.src import data
from green_complexity.models import bipartite
from green_complexity.models import complexity
from green_complexity.models import relatedness
from green_complexity.models import null_model
from green_complexity.models import green
