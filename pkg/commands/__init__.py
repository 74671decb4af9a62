"""
子命令模块
每个子命令一个 run_*_command(args) 函数，返回退出码
"""
