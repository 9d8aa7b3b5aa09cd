# Graph model: CDN multigraph, stripped digraph, graph files.
