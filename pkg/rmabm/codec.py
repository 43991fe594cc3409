from msgpack import packb, unpackb
import numpy as np

from rmabm.errors import ArtifactError


def pack_array(arr):
    arr = np.ascontiguousarray(arr)
    return {'dtype': arr.dtype.str, 'shape': list(arr.shape), 'data': arr.tobytes()}


def unpack_array(obj):
    return np.frombuffer(obj['data'], dtype=np.dtype(obj['dtype'])).reshape(obj['shape']).copy()


def dumps(fmt, version, payload):
    return packb({'format': fmt, 'version': version, **payload}, use_bin_type=True)


def loads(data, fmt, version, *, path=None):
    try:
        obj = unpackb(data, raw=False)
    except Exception as exc:
        raise ArtifactError(f'{path or "data"}: cannot decode {fmt} dump: {exc}', path=path) from None

    if not isinstance(obj, dict) or obj.get('format') != fmt:
        raise ArtifactError(f'{path or "data"}: not a {fmt} dump', path=path)

    if obj.get('version') != version:
        raise ArtifactError(f"{path or 'data'}: unsupported {fmt} version {obj.get('version')}", path=path)

    return obj


def read_bytes(path, what):
    try:
        with open(path, 'rb') as f:
            return f.read()
    except (FileNotFoundError, IsADirectoryError):
        raise ArtifactError(f'{what} file {path} was not found', path=path) from None


def write_bytes(path, data):
    with open(path, 'wb') as f:
        f.write(data)
