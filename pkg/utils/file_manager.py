"""
File management utilities.
"""

import hashlib
import json
import logging
import os
from typing import Any, Dict, Iterable, Set

from utils.error_handler import DataError


class FileManager:
    """File naming, hashing and atomic writes used by the on-disk formats."""

    @staticmethod
    def clean_filename(filename: str) -> str:
        """Clean and sanitize a file stem."""
        unsafe_chars = '<>:"/\\|?*'
        for char in unsafe_chars:
            filename = filename.replace(char, '_')

        filename = ''.join(char for char in filename if ord(char) >= 32)
        filename = '_'.join(filename.split())
        filename = filename.strip('. ')

        if len(filename) > 200:
            filename = filename[:200]

        return filename or "unnamed"

    @staticmethod
    def get_unique_stem(stem: str, taken: Set[str]) -> str:
        """Get a stem not in ``taken`` by adding a number suffix, and reserve it."""
        candidate = stem
        counter = 1
        while candidate in taken:
            candidate = f"{stem}_{counter}"
            counter += 1
        taken.add(candidate)
        return candidate

    @staticmethod
    def ensure_directory(path: str) -> str:
        """Create a directory if needed and check it is writable."""
        try:
            os.makedirs(path, exist_ok=True)
        except OSError as e:
            raise DataError(f"Cannot create directory: {e}", path=path)
        if not os.access(path, os.W_OK):
            raise DataError("Directory is not writable", path=path)
        return path

    @staticmethod
    def write_bytes_atomic(filepath: str, payload: bytes):
        """Write a file through a temporary sibling so readers never see partial data."""
        tmp_path = f"{filepath}.tmp"
        with open(tmp_path, 'wb') as f:
            f.write(payload)
        os.replace(tmp_path, filepath)

    @classmethod
    def write_json(cls, filepath: str, data: Dict[str, Any]):
        """Write JSON with sorted keys so equal content gives equal bytes."""
        payload = json.dumps(data, indent=2, sort_keys=True).encode('utf-8') + b"\n"
        cls.write_bytes_atomic(filepath, payload)

    @staticmethod
    def calculate_file_hash(filepath: str) -> str:
        """SHA-256 of a file."""
        hash_obj = hashlib.sha256()
        with open(filepath, 'rb') as f:
            for chunk in iter(lambda: f.read(65536), b""):
                hash_obj.update(chunk)

        return hash_obj.hexdigest()

    @classmethod
    def get_directory_hashes(cls, directory: str, ignore: Iterable[str] = ()) -> Dict[str, str]:
        """Map every file below ``directory`` (relative path) to its hash."""
        ignored = set(ignore)
        hashes = {}
        for root, dirs, files in os.walk(directory):
            dirs.sort()
            for filename in sorted(files):
                if filename in ignored:
                    continue
                filepath = os.path.join(root, filename)
                hashes[os.path.relpath(filepath, directory)] = cls.calculate_file_hash(filepath)
        logging.debug(f"Hashed {len(hashes)} files below {directory}")
        return hashes
