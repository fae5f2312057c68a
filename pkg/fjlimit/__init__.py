# ruff: noqa: F401, F403

from .config import *
from .distributions import *
from .enum import *
from .exceptions import *
from .forkjoin import *
from .limit import *
from .output import *
from .scaling import *
from .stats import *
from .util import *
