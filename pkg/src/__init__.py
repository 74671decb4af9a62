"""
平均场脉冲神经元系统 - 源代码包
"""
