"""Exception hierarchy shared across the toolkit.

Parse failures carry enough context in the message to locate the offending
input (entry name, byte offset, line number) without a debugger.
"""


class ApkTriageError(Exception):
    """Base class for all analysis errors raised by this package."""


class NotAnApp(ApkTriageError):
    """Input path is neither an apktool output directory nor a raw APK."""


class ZipCorrupt(ApkTriageError):
    """APK container violates the classic ZIP format."""


class AxmlCorrupt(ApkTriageError):
    """Binary XML chunk stream is malformed."""


class DexCorrupt(ApkTriageError):
    """DEX header or constant pool is malformed."""


class ManifestMissing(ApkTriageError):
    """APK has no AndroidManifest.xml entry."""


class ManifestUnparsable(ApkTriageError):
    """Manifest exists but cannot be turned into manifest facts."""


class CatalogInvalid(ApkTriageError):
    """A catalog document fails schema or invariant validation."""


class BadName(ApkTriageError):
    """Dotted Java name has no class segment to convert."""


class UnknownDeclaredCategory(UserWarning):
    """Declared market category names no known rule; analysis proceeds."""
