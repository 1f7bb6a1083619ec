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
"""Exceptions raised by bcmlab.

Plain precondition violations raise the built-in ``ValueError``; the
classes here mark failures the command line maps to exit codes.

"""

__all__ = ['BCMError', 'ConfigError', 'ChecksumError', 'NumericAbort']


class BCMError(Exception):
    """Base class for all bcmlab specific failures."""


class ConfigError(ValueError, BCMError):
    """A configuration file could not be turned into a config.

    :param message: Human readable description.
    :type message: str

    :param keys: The offending keys (unknown, missing or unparsable).
    :type keys: list

    """

    def __init__(self, message, keys=()):
        self.keys = list(keys)
        if self.keys:
            message = "{}: {}".format(message, ", ".join(self.keys))
        super().__init__(message)


class ChecksumError(BCMError):
    """A checkpoint does not match the checksum in its manifest."""


class NumericAbort(BCMError):
    """Training produced a non-finite loss or parameter.

    :param iteration: Iteration index at which the failure happened.
    :type iteration: int

    :param dump_path: Where the failing batch was serialized (or None).
    :type dump_path: str

    """

    def __init__(self, message, iteration=None, dump_path=None):
        self.iteration = iteration
        self.dump_path = dump_path
        if dump_path is not None:
            message = "{} (batch saved to {})".format(message, dump_path)
        super().__init__(message)
