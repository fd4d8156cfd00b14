"""Static principal-agent model: outcomes, contracts and strategic workers."""
