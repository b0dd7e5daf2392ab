"""This module contains simple helper functions """
import os
import tempfile


def mkdir(path):
    """create a single empty directory if it didn't exist

    Parameters:
        path (str) -- a single directory path
    """
    if path and not os.path.exists(path):
        os.makedirs(path, exist_ok=True)


def atomic_write(path, data):
    """Write text (or bytes) to `path` through a temporary file in the same directory.

    Readers see either the old file or the complete new one.
    """
    directory = os.path.dirname(os.path.abspath(path))
    mkdir(directory)
    binary = isinstance(data, bytes)
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix='.' + os.path.basename(path) + '.', suffix='.tmp')
    try:
        with os.fdopen(fd, 'wb' if binary else 'w', **({} if binary else {'newline': '\n', 'encoding': 'utf-8'})) as f:
            f.write(data)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
