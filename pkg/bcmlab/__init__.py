#
# Part of bcmlab: bidirectional consistency models on toy densities
# Copyright (C) 2024-2026 The bcmlab developers
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful, but
# WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE. See the GNU
# General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program. If not, see <http://www.gnu.org/licenses/>.
#
"""Bidirectional consistency models on toy densities."""

from .errors import *
from .pmath import *
from .core import *
from .data import *
from .io import *

from .__version__ import __title__
from .__version__ import __description__
from .__version__ import __version__
from .__version__ import __author__
from .__version__ import __license__
from .__version__ import __copyright__
