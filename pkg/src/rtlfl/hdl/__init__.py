from rtlfl.hdl.elaborate import DesignHierarchy, SignalRef, elaborate
from rtlfl.hdl.parser import SourceUnit, parse_sources

__all__ = ["DesignHierarchy", "SignalRef", "SourceUnit", "elaborate", "parse_sources"]
