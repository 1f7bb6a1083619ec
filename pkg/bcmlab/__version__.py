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

__title__ = 'bcmlab'
__description__ = 'Bidirectional consistency models on toy densities'
__version__ = '0.3.0'
__author__ = 'The bcmlab developers'
__license__ = ' GNU GPLv3'
__copyright__ = 'Copyright (C) 2024-2026 The bcmlab developers'
