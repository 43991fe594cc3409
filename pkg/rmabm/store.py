from contextlib import contextmanager
from datetime import datetime, timezone
from hashlib import sha256
from os import path
import logging
import os
import shutil
import time

import yaml

from rmabm.errors import ConfigurationError
from rmabm.params import config_to_dict


logger = logging.getLogger(__name__)

SUBDIRS = ('frames', 'summary', 'policy')
DEFAULT_ROOT = 'out'
OUT_ENV = 'RMABM_OUT'


def output_root(out=None):
    return out or os.environ.get(OUT_ENV) or DEFAULT_ROOT


def _check_valid_name(name):
    if not name.replace('-', '').replace('_', '').replace('=', '').replace('.', '').isalnum():
        raise ConfigurationError(f'invalid output name: {name}', key='name')


def file_digest(file_path):
    h = sha256()
    with open(file_path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 20), b''):
            h.update(chunk)
    return h.hexdigest()


class RunOutput(object):
    """Directory `<root>/<experiment>/<cell>` collecting the artifacts of one command."""

    def __init__(self, base_path):
        self.base_path = base_path
        self.artifacts = []
        self.started = datetime.now(timezone.utc)
        self._clock = time.monotonic()


    def subdir(self, name):
        dir_path = path.join(self.base_path, name)
        os.makedirs(dir_path, exist_ok=True)
        return dir_path


    def artifact(self, subdir, file_name):
        """Path of a new artifact; every artifact ends up checksummed in the manifest."""
        file_path = path.join(self.subdir(subdir), file_name)
        self.add(file_path)
        return file_path


    def add(self, file_path):
        if file_path not in self.artifacts:
            self.artifacts.append(file_path)


    def write_manifest(self, cfg, *, command, overrides=(), seeds=(), extra=None):
        for file_path in self.artifacts:
            if not path.isfile(file_path):
                raise LookupError(f'artifact {file_path} was not written')

        finished = datetime.now(timezone.utc)
        manifest = {
            'command': command,
            'config': config_to_dict(cfg),
            'overrides': list(overrides),
            'seeds': [int(s) for s in seeds],
            'output_dir': path.abspath(self.base_path),
            'artifacts': {
                path.relpath(p, self.base_path): file_digest(p)
                for p in self.artifacts
            },
            'started': self.started.isoformat(),
            'finished': finished.isoformat(),
            'wall_seconds': round(time.monotonic() - self._clock, 3),
        }
        if extra:
            manifest.update(extra)

        manifest_path = path.join(self.base_path, 'manifest.yaml')
        with open(manifest_path, 'w') as outfile:
            yaml.safe_dump(manifest, outfile, sort_keys=False)

        logger.info('RunOutput.write_manifest: %d artifacts recorded in %s', len(self.artifacts), manifest_path)
        return manifest_path


    def discard(self):
        for file_path in self.artifacts:
            if path.isfile(file_path):
                os.remove(file_path)

        manifest_path = path.join(self.base_path, 'manifest.yaml')
        if path.isfile(manifest_path):
            os.remove(manifest_path)

        for name in SUBDIRS:
            dir_path = path.join(self.base_path, name)
            if path.isdir(dir_path) and not os.listdir(dir_path):
                os.rmdir(dir_path)


def read_manifest(base_path):
    manifest_path = path.join(base_path, 'manifest.yaml')

    if not path.isfile(manifest_path):
        raise LookupError(f'manifest for {base_path} was not found')

    with open(manifest_path, 'r') as infile:
        return yaml.safe_load(infile)


@contextmanager
def run_output(root, name, cell):
    """Yields a RunOutput; on error, everything it wrote is removed again."""
    _check_valid_name(name)
    _check_valid_name(cell)

    base_path = path.join(root, name, cell)
    created = not path.exists(base_path)
    os.makedirs(base_path, exist_ok=True)

    run = RunOutput(base_path)
    try:
        yield run
    except BaseException:
        if created:
            shutil.rmtree(base_path, ignore_errors=True)
        else:
            run.discard()
        logger.debug('run_output: partial outputs in %s removed', base_path)
        raise
