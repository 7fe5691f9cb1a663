import logging
from pathlib import Path
from typing import Dict, List, Optional

import networkx as nx

from Errors import SemanticMapError
from SemMap import TopoMap


class GraphExporter:
    """Writes a topological map as the line-oriented text document or as GraphML."""

    def __init__(self, precision: int = 6) -> None:
        self.precision = precision
        self.logger = logging.getLogger(__name__)

    def _fmt(self, value: float) -> str:
        return f"{value:.{self.precision}f}"

    def export_lines(self, topo: TopoMap, clusters: Optional[Dict[int, int]] = None) -> List[str]:
        """One `node` record per node, then one `edge` record per edge, in id order."""
        lines = []
        for node in topo.nodes:
            fields = ["node", str(node.id), self._fmt(node.center[0]), self._fmt(node.center[1])]
            fields.extend(self._fmt(o) for o in node.objects)
            if clusters is not None and node.id in clusters:
                fields.extend(["cluster", str(clusters[node.id])])
            lines.append(" ".join(fields))
        for a, b in topo.sorted_edges():
            lines.append(f"edge {a} {b}")
        return lines

    def export_graph(self, topo: TopoMap, clusters: Optional[Dict[int, int]] = None) -> str:
        """The text graph document, LF terminated."""
        lines = self.export_lines(topo, clusters)
        return "".join(f"{line}\n" for line in lines)

    def to_networkx(self, topo: TopoMap, clusters: Optional[Dict[int, int]] = None) -> nx.Graph:
        """Graph with scalar node attributes, as GraphML only carries scalars."""
        graph = nx.Graph()
        for node in topo.nodes:
            attributes = {
                "x": round(float(node.center[0]), self.precision),
                "y": round(float(node.center[1]), self.precision),
                "objects": " ".join(self._fmt(o) for o in node.objects),
            }
            if clusters is not None and node.id in clusters:
                attributes["cluster"] = int(clusters[node.id])
            graph.add_node(node.id, **attributes)
        graph.add_edges_from(topo.sorted_edges())
        return graph

    def export_graphml(self, topo: TopoMap, clusters: Optional[Dict[int, int]] = None) -> str:
        return "\n".join(nx.generate_graphml(self.to_networkx(topo, clusters))) + "\n"

    def write(self, topo: TopoMap, path: Path, clusters: Optional[Dict[int, int]] = None) -> Path:
        """Write the map; the `.graphml` suffix selects GraphML, anything else the text format."""
        path = Path(path)
        document = (
            self.export_graphml(topo, clusters)
            if path.suffix.lower() == ".graphml"
            else self.export_graph(topo, clusters)
        )
        try:
            path.write_text(document, encoding="utf-8", newline="\n")
        except OSError as e:
            raise SemanticMapError(f"could not write graph {path}: {e}") from e
        self.logger.info(f"wrote {len(topo.nodes)} nodes and {len(topo.edges)} edges to {path}")
        return path
