

class RMABMError(Exception):
    pass


class ConfigurationError(RMABMError, ValueError):
    def __init__(self, message, *, key=None):
        super().__init__(message)
        self._key = key

    @property
    def key(self):
        return self._key


class IntegrityError(RMABMError):
    def __init__(self, message, *, step=None, mismatch=None):
        super().__init__(message)
        self._step = step
        self._mismatch = mismatch

    @property
    def step(self):
        return self._step

    @property
    def mismatch(self):
        return self._mismatch


class ArtifactError(RMABMError, LookupError):
    def __init__(self, message, *, path=None):
        super().__init__(message)
        self._path = path

    @property
    def path(self):
        return self._path
