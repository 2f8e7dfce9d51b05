"""Self-regulated reconfigurable subthreshold PUF simulator."""
