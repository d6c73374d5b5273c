"""Clinical concept graph embedding toolkit."""

try:
    from ._kgemb import *  # noqa: F401,F403  (installed wheel layout)
    from ._kgemb import __doc__  # noqa: F401
except ImportError:  # development build: the extension sits on sys.path directly
    from _kgemb import *  # noqa: F401,F403
    from _kgemb import __doc__  # noqa: F401
