"""Normalize manifests (text XML or decoded binary XML) into the facts the
categorizer and permission-gap analyzer consume: declared permissions,
components, and intent-filter actions.

The android: attribute prefix is matched by local name regardless of
namespace URI, tolerating apktool's occasional namespace stripping.
Resource references (android:name="@string/x") are kept verbatim.
"""

from __future__ import annotations

import enum
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass

from .axml import XmlAttr, XmlNode, XmlTree
from .errors import ManifestUnparsable

PACKAGE_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z_][A-Za-z0-9_]*)*\Z")

_PERMISSION_TAGS = {"uses-permission", "uses-permission-sdk-23"}


class ComponentKind(enum.Enum):
    ACTIVITY = "activity"
    SERVICE = "service"
    RECEIVER = "receiver"
    PROVIDER = "provider"


_COMPONENT_TAGS = {kind.value: kind for kind in ComponentKind}


@dataclass(frozen=True)
class Component:
    kind: ComponentKind
    name: str


@dataclass(frozen=True)
class ManifestInfo:
    package: str
    declared_permissions: frozenset[str]
    components: tuple[Component, ...]
    intent_actions: frozenset[str]


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _attr_from_et(key: str, value: str) -> XmlAttr:
    if key.startswith("{"):
        uri, local = key[1:].split("}", 1)
        return XmlAttr(namespace=uri, name=local, value=value)
    return XmlAttr(namespace=None, name=key, value=value)


def _element_to_node(elem: ET.Element) -> XmlNode:
    node = XmlNode(name=_local(elem.tag))
    node.attributes = [_attr_from_et(k, v) for k, v in elem.attrib.items()]
    node.children = [_element_to_node(child) for child in elem]
    return node


def _attr(node: XmlNode, name: str) -> str | None:
    """Attribute value by local name; namespaced declarations win."""
    bare = None
    for attr in node.attributes:
        if attr.name != name:
            continue
        if attr.namespace is not None:
            return attr.value
        bare = attr.value
    return bare


def _walk(node: XmlNode):
    yield node
    for child in node.children:
        yield from _walk(child)


def _extract(root: XmlNode) -> ManifestInfo:
    if root.name != "manifest":
        raise ManifestUnparsable(
            f"root element is <{root.name}>, expected <manifest>")
    package = _attr(root, "package")
    if not package:
        raise ManifestUnparsable("manifest has no package attribute")
    if not PACKAGE_RE.match(package):
        raise ManifestUnparsable(f"invalid package name {package!r}")

    permissions: set[str] = set()
    components: list[Component] = []
    actions: set[str] = set()

    for node in _walk(root):
        if node.name in _PERMISSION_TAGS:
            name = _attr(node, "name")
            if name:
                permissions.add(name)
        elif node.name == "application":
            for child in node.children:
                kind = _COMPONENT_TAGS.get(child.name)
                if kind is None:
                    continue
                name = _attr(child, "name")
                if name:
                    components.append(Component(kind=kind, name=name))
        elif node.name == "intent-filter":
            for inner in _walk(node):
                if inner.name == "action":
                    name = _attr(inner, "name")
                    if name:
                        actions.add(name)

    return ManifestInfo(
        package=package,
        declared_permissions=frozenset(permissions),
        components=tuple(components),
        intent_actions=frozenset(actions),
    )


def parse_manifest_xml(text: str) -> ManifestInfo:
    """Extract manifest facts from a text AndroidManifest.xml document."""
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise ManifestUnparsable(f"xml syntax error: {exc}") from exc
    return _extract(_element_to_node(root))


def manifest_from_axml(tree: XmlTree) -> ManifestInfo:
    """Extract manifest facts from a decoded binary manifest.

    Same extraction semantics as parse_manifest_xml.
    """
    return _extract(tree.root)
